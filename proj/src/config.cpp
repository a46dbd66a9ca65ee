#include "treegp/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace treegp {

namespace {

struct KeyParser {
  std::vector<std::string> errors;

  void fail(const std::string& key, const std::string& why) {
    errors.push_back(key + ": " + why);
  }
  bool number(const std::string& key, const std::string& val, double& out) {
    char* endp = nullptr;
    out = std::strtod(val.c_str(), &endp);
    if (val.empty() || endp != val.c_str() + val.size()) {
      fail(key, "expected a number, got '" + val + "'");
      return false;
    }
    return true;
  }
  bool integer(const std::string& key, const std::string& val, long long& out) {
    double d;
    if (!number(key, val, d)) return false;
    out = static_cast<long long>(d);
    if (static_cast<double>(out) != d) {
      fail(key, "expected an integer, got '" + val + "'");
      return false;
    }
    return true;
  }
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

FitConfig FitConfig::parse_text(const std::string& text,
                                const std::string& origin) {
  FitConfig cfg;
  KeyParser p;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      p.errors.push_back(origin + ":" + std::to_string(line_no) +
                         ": expected 'key = value'");
      continue;
    }
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    double d;
    long long i;

    if (key == "data") {
      cfg.data_path = val;
    } else if (key == "response") {
      cfg.response = val;
    } else if (key == "out") {
      cfg.out_dir = val;
    } else if (key == "rounds") {
      if (p.integer(key, val, i)) cfg.mcmc.rounds = static_cast<int>(i);
    } else if (key == "burn_in") {
      if (p.integer(key, val, i)) cfg.mcmc.burn_in = static_cast<int>(i);
    } else if (key == "thin") {
      if (p.integer(key, val, i)) cfg.mcmc.thin = static_cast<int>(i);
    } else if (key == "chains") {
      if (p.integer(key, val, i)) cfg.mcmc.chains = static_cast<int>(i);
    } else if (key == "seed") {
      if (p.integer(key, val, i)) cfg.mcmc.seed = static_cast<uint64_t>(i);
    } else if (key == "checkpoint_every") {
      if (p.integer(key, val, i))
        cfg.mcmc.checkpoint_every = static_cast<int>(i);
    } else if (key == "family") {
      if (val == "isotropic")
        cfg.mcmc.family = CorrFamily::Isotropic;
      else if (val == "separable")
        cfg.mcmc.family = CorrFamily::Separable;
      else
        p.fail(key, "expected isotropic or separable, got '" + val + "'");
    } else if (key == "p0") {
      if (p.number(key, val, d)) cfg.mcmc.p0 = d;
    } else if (key == "move_weights") {
      std::istringstream ws(val);
      std::string cell;
      std::vector<double> w;
      while (std::getline(ws, cell, ',')) {
        double x;
        if (p.number(key, trim(cell), x)) w.push_back(x);
      }
      if (w.size() == 4)
        for (int k = 0; k < 4; ++k) cfg.mcmc.move_weights[k] = w[k];
      else
        p.fail(key, "expected 4 comma-separated weights");
    } else if (key == "alpha_sigma") {
      if (p.number(key, val, d)) cfg.mcmc.hyper.alpha_sigma = d;
    } else if (key == "q_sigma") {
      if (p.number(key, val, d)) cfg.mcmc.hyper.q_sigma = d;
    } else if (key == "alpha_tau") {
      if (p.number(key, val, d)) cfg.mcmc.hyper.alpha_tau = d;
    } else if (key == "q_tau") {
      if (p.number(key, val, d)) cfg.mcmc.hyper.q_tau = d;
    } else if (key == "lambda") {
      if (p.number(key, val, d)) cfg.mcmc.hyper.lambda_g = d;
    } else if (key == "tree_a") {
      if (p.number(key, val, d)) cfg.mcmc.hyper.tree_a = d;
    } else if (key == "tree_b") {
      if (p.number(key, val, d)) cfg.mcmc.hyper.tree_b = d;
    } else if (key == "mu") {
      if (p.number(key, val, d)) cfg.mu_scalar = d;
    } else if (key == "b_scale") {
      if (p.number(key, val, d)) cfg.b_scale = d;
    } else if (key == "v_scale") {
      if (p.number(key, val, d)) cfg.v_scale = d;
    } else if (key == "rho") {
      if (p.number(key, val, d)) cfg.rho = d;
    } else if (key == "workers") {
      if (p.integer(key, val, i)) cfg.workers = static_cast<int>(i);
    } else {
      p.fail(key, "unknown configuration key");
    }
  }

  if (cfg.data_path.empty()) p.errors.push_back("data: missing (required)");
  if (cfg.mcmc.rounds < 1) p.errors.push_back("rounds: must be >= 1");
  if (cfg.mcmc.burn_in < 0 || cfg.mcmc.burn_in >= cfg.mcmc.rounds)
    p.errors.push_back("burn_in: need 0 <= burn_in < rounds");
  if (cfg.mcmc.thin < 1) p.errors.push_back("thin: must be >= 1");
  if (cfg.mcmc.chains < 1) p.errors.push_back("chains: must be >= 1");
  if (!(cfg.mcmc.p0 > 0.0 && cfg.mcmc.p0 <= 2.0))
    p.errors.push_back("p0: must lie in (0, 2]");
  {
    double sum = 0.0;
    bool neg = false;
    for (double w : cfg.mcmc.move_weights) {
      sum += w;
      neg = neg || w < 0.0;
    }
    if (neg) p.errors.push_back("move_weights: must be nonnegative");
    if (sum > 1.0 + 1e-9) p.errors.push_back("move_weights: sum exceeds 1");
  }
  if (cfg.mcmc.hyper.alpha_sigma <= 0 || cfg.mcmc.hyper.q_sigma <= 0 ||
      cfg.mcmc.hyper.alpha_tau <= 0 || cfg.mcmc.hyper.q_tau <= 0)
    p.errors.push_back("alpha_sigma/q_sigma/alpha_tau/q_tau: must be positive");
  if (cfg.mcmc.hyper.lambda_g <= 0) p.errors.push_back("lambda: must be positive");
  if (!(cfg.mcmc.hyper.tree_a > 0 && cfg.mcmc.hyper.tree_a < 1))
    p.errors.push_back("tree_a: must lie in (0, 1)");
  if (cfg.mcmc.hyper.tree_b < 0) p.errors.push_back("tree_b: must be >= 0");
  if (cfg.b_scale <= 0 || cfg.v_scale <= 0)
    p.errors.push_back("b_scale/v_scale: must be positive");
  if (cfg.workers < 0) p.errors.push_back("workers: must be >= 0");

  if (!p.errors.empty()) {
    std::string msg = "invalid configuration (" + origin + "):";
    for (const std::string& e : p.errors) msg += "\n  - " + e;
    throw ParamError(msg);
  }
  return cfg;
}

FitConfig FitConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_text(ss.str(), path);
}

FixedHyper FitConfig::resolve_hyper(int m) const {
  FixedHyper f = mcmc.hyper;
  f.mu = VectorXd::Constant(m, mu_scalar);
  f.B = b_scale * MatrixXd::Identity(m, m);
  f.V = v_scale * MatrixXd::Identity(m, m);
  f.rho = rho > 0.0 ? rho : m;
  f.validate(m);
  return f;
}

}  // namespace treegp
