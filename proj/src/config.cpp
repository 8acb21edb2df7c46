#include "wdur/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "wdur/errors.hpp"

namespace wdur {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& v) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    out = static_cast<T>(std::stod(v, &used));
    if (used != v.size()) throw std::invalid_argument(v);
  } else {
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument(v);
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument(v);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

template <class T>
Setter number(T RunConfig::*field) {
  return [field](RunConfig& c, const std::string& v) { c.*field = parse_number<T>(v); };
}

template <class S, class T>
Setter nested(S RunConfig::*outer, T S::*field) {
  return [outer, field](RunConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, bool>) {
      (c.*outer).*field = parse_bool(v);
    } else {
      (c.*outer).*field = parse_number<T>(v);
    }
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"T", number(&RunConfig::T)},
      {"beta_min", number(&RunConfig::beta_min)},
      {"beta_max", number(&RunConfig::beta_max)},
      {"lambda_mix", nested(&RunConfig::projection, &ProjectionParams::lambda_mix)},
      {"match_noise", nested(&RunConfig::projection, &ProjectionParams::match_noise)},
      {"channels", nested(&RunConfig::net, &NetConfig::channels)},
      {"base_width", nested(&RunConfig::net, &NetConfig::base_width)},
      {"heads", nested(&RunConfig::net, &NetConfig::heads)},
      {"attn_dim", nested(&RunConfig::net, &NetConfig::attn_dim)},
      {"temb_dim", nested(&RunConfig::net, &NetConfig::temb_dim)},
      {"model_seed", number(&RunConfig::model_seed)},
      {"r", nested(&RunConfig::cascade, &CascadeConfig::r)},
      {"R", nested(&RunConfig::cascade, &CascadeConfig::R)},
      {"k", nested(&RunConfig::cascade, &CascadeConfig::k)},
      {"mode", [](RunConfig& c, const std::string& v) { c.cascade.mode = parse_mode(v); }},
      {"hf_sigma", nested(&RunConfig::cascade, &CascadeConfig::hf_sigma)},
      {"steps", nested(&RunConfig::train, &TrainConfig::steps)},
      {"batch", nested(&RunConfig::train, &TrainConfig::batch)},
      {"lr0", nested(&RunConfig::train, &TrainConfig::lr0)},
      {"decay", nested(&RunConfig::train, &TrainConfig::decay)},
      {"decay_every", nested(&RunConfig::train, &TrainConfig::decay_every)},
      {"seed", nested(&RunConfig::train, &TrainConfig::seed)},
      {"lambda1", [](RunConfig& c, const std::string& v) { c.train.loss_weights.lambda1 = parse_number<double>(v); }},
      {"lambda2", [](RunConfig& c, const std::string& v) { c.train.loss_weights.lambda2 = parse_number<double>(v); }},
      {"optimizer", [](RunConfig& c, const std::string& v) { c.train.optimizer = parse_optimizer(v); }},
      {"grad_clip", nested(&RunConfig::train, &TrainConfig::grad_clip)},
      {"checkpoint_every", nested(&RunConfig::train, &TrainConfig::checkpoint_every)},
      {"data", [](RunConfig& c, const std::string& v) { c.data = v; }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw UsageError(where + ": unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const UsageError& e) {
      throw UsageError(where + ": " + e.what());
    } catch (const std::exception&) {
      throw UsageError(where + ": bad value '" + value + "' for '" + key + "'");
    }
  }
  validate(cfg.projection);
  validate(cfg.net);
  validate(cfg.train);
  cfg.schedule();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const RunConfig& c) {
  const auto old_precision = out.precision(17);
  out << "T = " << c.T << "\nbeta_min = " << c.beta_min << "\nbeta_max = " << c.beta_max
      << "\nlambda_mix = " << c.projection.lambda_mix
      << "\nmatch_noise = " << (c.projection.match_noise ? "true" : "false")
      << "\nchannels = " << c.net.channels << "\nbase_width = " << c.net.base_width
      << "\nheads = " << c.net.heads << "\nattn_dim = " << c.net.attn_dim
      << "\ntemb_dim = " << c.net.temb_dim << "\nmodel_seed = " << c.model_seed
      << "\nr = " << c.cascade.r << "\nR = " << c.cascade.R << "\nk = " << c.cascade.k
      << "\nmode = " << to_string(c.cascade.mode) << "\nhf_sigma = " << c.cascade.hf_sigma
      << "\nsteps = " << c.train.steps << "\nbatch = " << c.train.batch
      << "\nlr0 = " << c.train.lr0 << "\ndecay = " << c.train.decay
      << "\ndecay_every = " << c.train.decay_every << "\nseed = " << c.train.seed
      << "\nlambda1 = " << c.train.loss_weights.lambda1
      << "\nlambda2 = " << c.train.loss_weights.lambda2
      << "\noptimizer = " << to_string(c.train.optimizer) << "\ngrad_clip = " << c.train.grad_clip
      << "\ncheckpoint_every = " << c.train.checkpoint_every << "\ndata = " << c.data.string()
      << "\nout = " << c.out.string() << '\n';
  out.precision(old_precision);
}

}  // namespace wdur
