#include "wdur/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "wdur/errors.hpp"

namespace wdur {

GradCheckResult check_gradients(const Objective& objective, ParamStore<double>& params,
                                int samples, std::uint64_t seed, double h, double floor) {
  struct Slot {
    std::string name;
    std::size_t index;
  };
  std::vector<Slot> slots;
  for (const auto& [name, p] : params.entries())
    for (std::size_t i = 0; i < p.value.size(); ++i) slots.push_back({name, i});
  if (slots.empty()) throw ParameterError("check_gradients: no parameters");

  params.zero_grad();
  {
    Graph<double> g;
    g.backward(objective(g, params));
  }
  auto eval = [&] {
    Graph<double> g(false);
    return g.scalar(objective(g, params));
  };

  Rng rng(seed);
  std::shuffle(slots.begin(), slots.end(), rng);
  const int n = std::min<int>(samples, static_cast<int>(slots.size()));
  GradCheckResult out;
  for (int s = 0; s < n; ++s) {
    auto& p = params.get(slots[s].name);
    const std::size_t i = slots[s].index;
    const double saved = p.value[i];
    p.value[i] = saved + h;
    const double up = eval();
    p.value[i] = saved - h;
    const double down = eval();
    p.value[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = p.grad[i];
    const double rel =
        std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
    ++out.checked;
    if (rel > out.max_rel_error || out.worst.empty()) {
      out.max_rel_error = std::max(out.max_rel_error, rel);
      if (rel >= out.max_rel_error) out.worst = slots[s].name + "[" + std::to_string(i) + "]";
    }
  }
  return out;
}

void randomize_zero_tensors(ParamStore<double>& params, Rng& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& [name, p] : params.entries()) {
    if (std::all_of(p.value.begin(), p.value.end(), [](double v) { return v == 0.0; })) {
      for (double& v : p.value) v = normal(rng);
    }
  }
}

}  // namespace wdur
