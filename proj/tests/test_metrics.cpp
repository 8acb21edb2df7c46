#include <doctest.h>

#include "helpers.hpp"
#include "metric_oracles.hpp"
#include "wdur/errors.hpp"
#include "wdur/metrics.hpp"

using namespace wdur;

TEST_SUITE("metrics") {
  TEST_CASE("identity cases") {
    const ImageTensor x = test::uniform_image(12, 10, 3, 1, 0.05f, 1.0f);
    const MetricReport r = evaluate(x, x);
    CHECK(r.psnr == 100.0);
    CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.sam == 0.0);
    CHECK(r.sre == 0.0);
  }

  TEST_CASE("against brute-force oracles") {
    for (std::uint64_t s = 0; s < 30; ++s) {
      const ImageTensor g = test::uniform_image(12, 13, 3, s);
      const ImageTensor p = axpby(0.8f, g, 0.2f, test::uniform_image(12, 13, 3, s + 1000));
      CHECK(psnr(p, g) == doctest::Approx(oracle::psnr(p, g)).epsilon(1e-9));
      CHECK(std::abs(ssim(p, g) - oracle::ssim(p, g)) < 1e-9);
      CHECK(std::abs(sam(p, g) - oracle::sam(p, g)) < 1e-6);
      CHECK(sre(p, g) == doctest::Approx(oracle::sre(p, g)).epsilon(1e-9));
      CHECK(ag(p) == doctest::Approx(oracle::ag(p)).epsilon(1e-9));
    }
  }

  TEST_CASE("closed-form values") {
    const ImageTensor g(8, 8, 1, 0.5f);
    CHECK(psnr(ImageTensor(8, 8, 1, 0.6f), g) == doctest::Approx(20.0).epsilon(1e-5));
    CHECK(psnr(ImageTensor(8, 8, 1, 0.5f + 1e-9f), g) == 100.0);
    // Orthogonal spectra are 90 degrees apart.
    ImageTensor a(1, 1, 2, {1.0f, 0.0f}), b(1, 1, 2, {0.0f, 2.0f});
    CHECK(sam(a, b) == doctest::Approx(90.0));
    ImageTensor ramp(4, 4, 1);
    for (int r = 0; r < 4; ++r)
      for (int q = 0; q < 4; ++q) ramp.at(r, q, 0) = 0.1f * q;
    CHECK(ag(ramp) == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-6));
  }

  TEST_CASE("sam skips zero spectra") {
    ImageTensor p(1, 2, 2, {0.0f, 0.0f, 1.0f, 1.0f});
    ImageTensor g(1, 2, 2, {1.0f, 0.0f, 1.0f, 1.0f});
    int skipped = -1;
    CHECK(sam(p, g, skipped) == 0.0);
    CHECK(skipped == 1);
    CHECK_THROWS_AS(sam(ImageTensor(2, 2, 3), ImageTensor(2, 2, 3)), NumericError);
  }

  TEST_CASE("ssim needs a full window") {
    CHECK_THROWS_AS(ssim(ImageTensor(7, 9, 1), ImageTensor(7, 9, 1)), ParameterError);
    CHECK_THROWS_AS(psnr(ImageTensor(2, 2, 1), ImageTensor(2, 3, 1)), ShapeError);
  }
}
