#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "wdur/data.hpp"
#include "wdur/errors.hpp"
#include "wdur/gradcheck.hpp"
#include "wdur/io.hpp"
#include "wdur/networks.hpp"
#include "wdur/wavelet.hpp"

using namespace wdur;

namespace {

NetConfig tiny() {
  NetConfig c;
  c.base_width = 4;
  c.heads = 2;
  c.attn_dim = 4;
  c.temb_dim = 8;
  return c;
}

ParamStore<double> randomized(const NetConfig& cfg, std::uint64_t seed) {
  ParamStore<double> p = make_model_params<double>(cfg, seed);
  Rng rng(seed + 1);
  randomize_zero_tensors(p, rng, 0.2);
  return p;
}

ParamStore<double> only(const ParamStore<double>& all, const std::string& prefix) {
  ParamStore<double> out;
  for (const auto& [name, p] : all.entries()) {
    if (name.rfind(prefix, 0) == 0) out.add(name, p.dims).value = p.value;
  }
  return out;
}

DetailBands detail_image(int h, int w, int c, std::uint64_t seed) {
  return {test::uniform_image(h, w, c, seed, -0.3f, 0.3f),
          test::uniform_image(h, w, c, seed + 1, -0.3f, 0.3f),
          test::uniform_image(h, w, c, seed + 2, -0.3f, 0.3f)};
}

void expect_ok(const GradCheckResult& r) {
  INFO("worst " << r.worst << " rel " << r.max_rel_error);
  CHECK(r.checked >= 100);
  CHECK(r.max_rel_error < 1e-4);
}

}  // namespace

TEST_SUITE("networks") {
  TEST_CASE("parameter registration") {
    const ParamStore<float> p = make_model_params<float>(NetConfig{}, 1);
    for (const auto& [name, e] : p.entries()) {
      CHECK(e.grad.size() == e.value.size());
      CHECK(e.value.size() == element_count(e.dims));
    }
    CHECK(p.contains("den.out.w"));
    CHECK(p.contains("csp.attn.wq"));
    CHECK(p.contains("cshr.attn_h.wo"));
    ParamStore<float> dup;
    dup.add("a", {1});
    CHECK_THROWS_AS(dup.add("a", {1}), ParameterError);
  }

  TEST_CASE("config validation") {
    NetConfig c;
    CHECK(c.heads == 12);
    for (int h : {8, 12, 16}) {
      c.heads = h;
      CHECK_NOTHROW(validate(c));
    }
    c.heads = 5;
    CHECK_THROWS_AS(validate(c), ParameterError);
  }

  TEST_CASE("denoiser shapes and zero head") {
    const Models m = make_models(tiny(), 2);
    for (int s : {8, 16, 32, 64}) {
      const ImageTensor x = test::uniform_image(s, s, 3, s);
      const ImageTensor e = predict_noise(m, x, 100, x);
      CHECK(e.same_shape(x));
      CHECK(max_abs_diff(e, ImageTensor(s, s, 3)) == 0.0f);
    }
    CHECK_THROWS_AS(predict_noise(m, ImageTensor(6, 6, 3), 1, ImageTensor(6, 6, 3)), ShapeError);
    CHECK_THROWS_AS(predict_noise(m, ImageTensor(8, 8, 3), 1, ImageTensor(8, 4, 3)), ShapeError);
  }

  TEST_CASE("csp and cshr shapes") {
    const Models m = make_models(tiny(), 3);
    for (int s : {8, 16, 32, 64}) {
      const ImageTensor lr = test::uniform_image(s, s, 3, s);
      const ImageTensor ref = test::uniform_image(s * 3 / 2, s * 3 / 2, 3, s + 1);
      const Condition c = csp_condition(m, lr, ref);
      CHECK(c.lf.same_shape(lr));
      REQUIRE(c.hf.has_value());
      CHECK(c.hf->D.same_shape(lr));
      CHECK(c == csp_condition(m, lr, ref));
      const DetailBands d = details_of(dwt2(lr));
      const DetailBands out = cshr_predict(m, d, *c.hf);
      CHECK(out.V.height() == s);
      CHECK(out.D.width() == s);
    }
    CHECK_THROWS_AS(csp_condition(m, ImageTensor(16, 16, 3), ImageTensor(8, 8, 3)), ParameterError);
  }

  TEST_CASE("zero heads pass the reference bands through") {
    const Models m = make_models(tiny(), 4);
    const ImageTensor lr = test::uniform_image(16, 16, 3, 5);
    const ImageTensor ref = test::uniform_image(24, 24, 3, 6);
    const Condition c = csp_condition(m, lr, ref);
    const WaveletBands rb = dwt2(bicubic_resize(ref, 32, 32));
    CHECK(max_abs_diff(c.lf, rb.A) < 1e-6f);
    CHECK(max_abs_diff(c.hf->V, rb.V) < 1e-6f);
    const DetailBands zero{ImageTensor(16, 16, 3), ImageTensor(16, 16, 3), ImageTensor(16, 16, 3)};
    const DetailBands out = cshr_predict(m, details_of(dwt2(lr)), zero);
    CHECK(max_abs_diff(out.V, zero.V) == 0.0f);
    CHECK(max_abs_diff(out.D, zero.D) == 0.0f);
  }

  TEST_CASE("timestep embedding") {
    const auto e = timestep_embedding(0, 8);
    for (int i = 0; i < 4; ++i) {
      CHECK(e[i] == 0.0);
      CHECK(e[4 + i] == 1.0);
    }
    CHECK(timestep_embedding(37, 8)[0] == doctest::Approx(std::sin(37.0)));
  }

  TEST_CASE("denoiser gradients") {
    const NetConfig cfg = tiny();
    ParamStore<double> p = only(randomized(cfg, 10), "den.");
    const ImageTensor x = test::uniform_image(8, 8, 3, 11, -1.0f, 1.0f);
    const ImageTensor c = test::uniform_image(8, 8, 3, 12);
    const std::vector<double> w = test::normal_vector(8 * 8 * 3, 13);
    expect_ok(check_gradients([&](Graph<double>& g, const ParamStore<double>& ps) {
      return g.dot(denoiser_forward(g, ps, cfg, g.constant(x), 321, g.constant(c)), w);
    }, p, 120, 14));
  }

  TEST_CASE("cross-attention gradients") {
    ParamStore<double> p;
    Rng rng(20);
    init_cross_attention(p, "xa", 5, 7, 12, rng);
    randomize_zero_tensors(p, rng, 0.3);
    const ImageTensor q = test::uniform_image(4, 3, 5, 21, -1.0f, 1.0f);
    const ImageTensor kv = test::uniform_image(3, 3, 7, 22, -1.0f, 1.0f);
    const std::vector<double> w = test::normal_vector(4 * 3 * 5, 23);
    for (int heads : {1, 3, 12}) {
      expect_ok(check_gradients([&](Graph<double>& g, const ParamStore<double>& ps) {
        return g.dot(cross_attention(g, ps, "xa", g.constant(q), g.constant(kv), heads), w);
      }, p, 120, 24));
    }
    Graph<double> g(false);
    CHECK_THROWS_AS(cross_attention(g, p, "xa", g.constant(q), g.constant(kv), 5), ParameterError);
  }

  TEST_CASE("csp encoder gradients") {
    const NetConfig cfg = tiny();
    ParamStore<double> p = only(randomized(cfg, 30), "csp.");
    const ImageTensor lr = test::uniform_image(8, 8, 3, 31);
    const ImageTensor ref = test::uniform_image(12, 12, 3, 32);
    const std::vector<double> w = test::normal_vector(8 * 8 * 3, 33);
    expect_ok(check_gradients([&](Graph<double>& g, const ParamStore<double>& ps) {
      const ConditionVars<double> c = csp_encode(g, ps, cfg, lr, ref);
      return g.sum({g.dot(c.lf, w), g.dot(c.v, w), g.dot(c.h, w), g.dot(c.d, w)});
    }, p, 120, 34));
  }

  TEST_CASE("cshr gradients") {
    const NetConfig cfg = tiny();
    ParamStore<double> p = only(randomized(cfg, 40), "cshr.");
    const DetailBands lr = detail_image(4, 4, 3, 41);
    const DetailBands cond = detail_image(8, 8, 3, 44);
    const std::vector<double> w = test::normal_vector(8 * 8 * 3, 47);
    expect_ok(check_gradients([&](Graph<double>& g, const ParamStore<double>& ps) {
      const DetailVars<double> d = cshr_restore(g, ps, cfg, lr, g.constant(cond.V),
                                                g.constant(cond.Hb), g.constant(cond.D));
      return g.sum({g.dot(d.v, w), g.dot(d.h, w), g.dot(d.d, w)});
    }, p, 120, 48));
    Graph<double> g(false);
    CHECK_THROWS_AS(cshr_restore(g, p, cfg, lr, g.constant(lr.V), g.constant(lr.Hb), g.constant(lr.D)),
                    ShapeError);
  }

  TEST_CASE("upscale_hf") {
    const DetailBands c{ImageTensor(4, 4, 1, 0.2f), ImageTensor(4, 4, 1, -0.1f), ImageTensor(4, 4, 1)};
    const DetailBands up = upscale_hf(c);
    CHECK(up.V.height() == 8);
    CHECK(max_abs_diff(up.V, ImageTensor(8, 8, 1, 0.2f)) < 1e-6f);
    CHECK(max_abs_diff(up.Hb, ImageTensor(8, 8, 1, -0.1f)) < 1e-6f);
    CHECK(upscale_hf(c).V == up.V);

    ImageTensor ramp(8, 8, 1);
    for (int r = 0; r < 8; ++r)
      for (int q = 0; q < 8; ++q) ramp.at(r, q, 0) = 0.05f * q - 0.2f;
    const DetailBands r = upscale_hf({ramp, ramp, ramp});
    // Output pixel q samples the input at (q + 0.5) / 2 - 0.5.
    for (int q = 4; q < 12; ++q) {
      const double expect = 0.05 * ((q + 0.5) / 2.0 - 0.5) - 0.2;
      CHECK(std::abs(r.V.at(7, q, 0) - expect) < 1e-3);
    }
    CHECK_THROWS_AS(upscale_hf(c, 0.5, nullptr), ParameterError);
    Rng rng(3);
    CHECK_FALSE(upscale_hf(c, 0.5, &rng).V == up.V);
  }

  TEST_CASE("models persistence is bit exact") {
    Models m = make_models(tiny(), 50);
    Rng rng(51);
    std::normal_distribution<float> n;
    for (auto& [name, p] : m.params.entries())
      for (float& v : p.value) v = n(rng);
    const auto path = std::filesystem::temp_directory_path() / "wdur_models_test.wdur";
    save_models(path, m);
    const Models back = load_models(path);
    CHECK(back.cfg == m.cfg);
    CHECK(back.params.tensor_count() == m.params.tensor_count());
    for (const auto& [name, p] : m.params.entries()) CHECK(back.params.get(name).value == p.value);
    std::filesystem::remove(path);
  }
}
