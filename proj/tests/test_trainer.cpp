#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "wdur/errors.hpp"
#include "wdur/losses.hpp"
#include "wdur/trainer.hpp"
#include "wdur/wavelet.hpp"

using namespace wdur;
namespace fs = std::filesystem;

namespace {

NetConfig tiny() {
  NetConfig c;
  c.base_width = 4;
  c.heads = 2;
  c.attn_dim = 4;
  c.temb_dim = 8;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("learning-rate schedule") {
    TrainConfig c;
    CHECK(c.lr0 == 1e-4);
    CHECK(c.decay == 0.8);
    CHECK(c.decay_every == 5000);
    CHECK(c.batch == 8);
    CHECK(lr_at(c, 0) == 1e-4);
    CHECK(lr_at(c, 4999) == 1e-4);
    CHECK(lr_at(c, 5000) == doctest::Approx(0.8e-4));
    CHECK(lr_at(c, 10000) == doctest::Approx(1e-4 * 0.8 * 0.8));
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    c.steps = 0;
    CHECK_THROWS_AS(validate(c), ParameterError);
    c = {};
    c.decay = 1.5;
    CHECK_THROWS_AS(validate(c), ParameterError);
    c = {};
    c.lr0 = 0.0;
    CHECK_THROWS_AS(validate(c), ParameterError);
    CHECK_THROWS_AS(parse_optimizer("rmsprop"), UsageError);
  }

  TEST_CASE("initial loss is finite and positive") {
    const auto data = make_synthetic_dataset(1, 2, 16, 1);
    ParamStore<float> p = make_model_params<float>(tiny(), 2);
    const NoiseSchedule s = make_schedule();
    Rng rng(3);
    const LossTerms t = pair_losses(p, tiny(), data[0], 500, gaussian(8, 8, 3, rng), s, {}, {});
    CHECK(std::isfinite(t.l_total));
    CHECK(t.l_total > 0.0);
    CHECK(t.l_total == doctest::Approx(t.l_diff + t.l_realness + t.l_consistent));
  }

  TEST_CASE("joint loss matches a recomputation from the image-level losses") {
    const auto data = make_synthetic_dataset(4, 1, 16, 1);
    Models m = make_models(tiny(), 5);
    Rng init(6);
    std::normal_distribution<float> n(0.0f, 0.02f);
    for (auto& [name, p] : m.params.entries())
      for (float& v : p.value)
        if (v == 0.0f) v = n(init);
    const NoiseSchedule s = make_schedule();
    Rng rng(7);
    const int t = 123;
    const ImageTensor eps = gaussian(8, 8, 3, rng);
    ParamStore<float> copy = m.params;
    const LossTerms got = pair_losses(copy, m.cfg, data[0], t, eps, s, {}, {});

    const SamplePair& pr = data[0];
    const WaveletBands hb = dwt2(pr.hr);
    const Condition cond = csp_condition(m, pr.lr, pr.ref);
    const ImageTensor xt = q_sample(hb.A, t, eps, s);
    const ImageTensor eps_hat = predict_noise(m, xt, t, cond.lf);
    const DetailBands hf = cshr_predict(m, details_of(dwt2(pr.lr)), *cond.hf);
    const double ab = s.alpha_bar(t);
    const ImageTensor x0 = clamp(axpby(static_cast<float>(1.0 / std::sqrt(ab)), xt,
                                       static_cast<float>(-std::sqrt(1.0 - ab) / std::sqrt(ab)), eps_hat),
                                 0.0f, 2.0f);
    const double d = l_diff(eps_hat, eps);
    const double r = l_realness(hf, details_of(hb));
    const double c = l_consistent(idwt2({x0, hf.V, hf.Hb, hf.D}), pr.hr);
    CHECK(got.l_diff == doctest::Approx(d).epsilon(1e-4));
    CHECK(got.l_realness == doctest::Approx(r).epsilon(1e-4));
    CHECK(got.l_consistent == doctest::Approx(c).epsilon(1e-4));
    CHECK(got.l_total == doctest::Approx(l_total(d, r, c)).epsilon(1e-4));
  }

  TEST_CASE("deterministic trajectories") {
    const auto data = make_synthetic_dataset(8, 6, 16, 1);
    const NoiseSchedule s = make_schedule();
    TrainConfig c;
    c.steps = 5;
    c.batch = 3;
    c.optimizer = OptimizerKind::adam;
    c.lr0 = 1e-3;
    Models a = make_models(tiny(), 9), b = make_models(tiny(), 9);
    const auto la = fit(data, a, s, c);
    const auto lb = fit(data, b, s, c);
    REQUIRE(la.size() == 5);
    for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i].terms.l_total == lb[i].terms.l_total);
    for (const auto& [name, p] : a.params.entries()) CHECK(b.params.get(name).value == p.value);
  }

  TEST_CASE("single step and checkpoint") {
    const fs::path dir = fs::temp_directory_path() / "wdur_trainer_test";
    fs::remove_all(dir);
    const auto data = make_synthetic_dataset(10, 2, 16, 1);
    const NoiseSchedule s = make_schedule();
    TrainConfig c;
    c.steps = 1;
    c.batch = 2;
    c.lr0 = 0.1;
    c.checkpoint_every = 1;
    Models m = make_models(tiny(), 11);
    const Models before = m;
    const auto log = fit(data, m, s, c, {}, dir);
    CHECK(log.size() == 1);
    CHECK(log[0].step == 0);
    CHECK(log[0].lr == 0.1);
    bool changed = false;
    for (const auto& [name, p] : m.params.entries()) changed = changed || p.value != before.params.get(name).value;
    CHECK(changed);
    const Models back = load_models(dir / "ckpt_1.wdur");
    for (const auto& [name, p] : m.params.entries()) CHECK(back.params.get(name).value == p.value);

    write_loss_csv(dir / "loss.csv", log);
    std::ifstream in(dir / "loss.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,lr,l_diff,l_realness,l_consistent,l_total");
    fs::remove_all(dir);
  }

  TEST_CASE("divergence reports step, t and lr") {
    const auto data = make_synthetic_dataset(12, 2, 16, 1);
    const NoiseSchedule s = make_schedule();
    TrainConfig c;
    c.steps = 50;
    c.batch = 1;
    c.lr0 = 1e12;
    Models m = make_models(tiny(), 13);
    try {
      fit(data, m, s, c);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("step") != std::string::npos);
      CHECK(msg.find("t=") != std::string::npos);
      CHECK(msg.find("lr=") != std::string::npos);
    }
  }

  TEST_CASE("loss goes down over training") {
    const auto data = make_synthetic_dataset(14, 40, 16, 1);
    const NoiseSchedule s = make_schedule();
    TrainConfig c;
    c.steps = 1000;
    c.batch = 4;
    c.optimizer = OptimizerKind::adam;
    c.lr0 = 1e-3;
    Models m = make_models(tiny(), 15);
    const auto log = fit(data, m, s, c);
    std::vector<double> early, late;
    for (const auto& r : log) {
      if (r.step < 100) early.push_back(r.terms.l_total);
      if (r.step >= 900) late.push_back(r.terms.l_total);
    }
    INFO("early median " << median(early) << " late median " << median(late));
    CHECK(median(late) < median(early));
  }
}
