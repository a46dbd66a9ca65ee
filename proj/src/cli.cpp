#include "treegp/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"

namespace treegp {

namespace {

using nlohmann::json;

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

VectorXd vector_from_json(const json& a) {
  VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i];
  return v;
}

MatrixXd matrix_from_json(const json& rows) {
  if (rows.empty()) return MatrixXd(0, 0);
  MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os.precision(17);
  return os;
}

}  // namespace

void write_fit_artifacts(const std::string& out_dir, const Dataset& data,
                         const McmcConfig& config, const FitResult& fit) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    json model;
    model["version"] = 1;
    model["x_names"] = data.scale.x_names;
    model["z_name"] = data.scale.z_name;
    model["x_min"] = vector_to_json(data.scale.x_min);
    model["x_max"] = vector_to_json(data.scale.x_max);
    model["z_mean"] = data.scale.z_mean;
    model["z_sd"] = data.scale.z_sd;
    model["family"] =
        config.family == CorrFamily::Isotropic ? "isotropic" : "separable";
    model["p0"] = config.p0;
    model["n_min"] = McmcConfig::n_min_for(data.m_x());
    model["X"] = matrix_to_json(data.X);
    model["Z"] = vector_to_json(data.Z);
    model["config"] = {{"rounds", config.rounds},
                       {"burn_in", config.burn_in},
                       {"thin", config.thin},
                       {"chains", config.chains},
                       {"seed", config.seed}};
    std::ofstream os = open_out(out_dir + "/model.json");
    os << model.dump(1) << "\n";
  }

  {
    std::ofstream os = open_out(out_dir + "/samples.jsonl");
    for (const PosteriorSample& s : fit.samples) {
      json row;
      row["chain"] = s.chain;
      row["round"] = s.round;
      row["log_posterior"] = s.log_posterior;
      row["beta0"] = vector_to_json(s.beta0);
      row["W"] = matrix_to_json(s.W);
      row["tree"] = serialize_tree(s.tree);
      os << row.dump() << "\n";
    }
  }

  {
    std::ofstream os = open_out(out_dir + "/trace.csv");
    os << "round,chain,leaves,log_posterior\n";
    for (const TraceRow& r : fit.trace)
      os << r.round << ',' << r.chain << ',' << r.leaf_count << ','
         << r.log_posterior << "\n";
  }

  {
    const PosteriorSample& best = map_tree(fit.samples);
    std::ofstream os = open_out(out_dir + "/map_tree.txt");
    os << "# MAP tree, log_posterior " << best.log_posterior << ", chain "
       << best.chain << ", round " << best.round << "\n";
    os << serialize_tree(best.tree) << "\n";
  }
}

ModelArtifacts load_model(const std::string& model_dir) {
  ModelArtifacts out;
  {
    std::ifstream is(model_dir + "/model.json");
    if (!is) throw IoError("cannot open " + model_dir + "/model.json");
    json model = json::parse(is, nullptr, true);
    if (model.value("version", 0) != 1)
      throw IoError("unsupported model version");
    out.scale.x_names = model["x_names"].get<std::vector<std::string>>();
    out.scale.z_name = model["z_name"];
    out.scale.x_min = vector_from_json(model["x_min"]);
    out.scale.x_max = vector_from_json(model["x_max"]);
    out.scale.z_mean = model["z_mean"];
    out.scale.z_sd = model["z_sd"];
    out.family = model["family"] == "separable" ? CorrFamily::Separable
                                                : CorrFamily::Isotropic;
    out.p0 = model["p0"];
    out.n_min = model["n_min"];
    out.X = matrix_from_json(model["X"]);
    out.Z = vector_from_json(model["Z"]);
  }
  {
    std::ifstream is(model_dir + "/samples.jsonl");
    if (!is) throw IoError("cannot open " + model_dir + "/samples.jsonl");
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      json row = json::parse(line);
      PosteriorSample s;
      s.chain = row["chain"];
      s.round = row["round"];
      s.log_posterior = row["log_posterior"];
      s.beta0 = vector_from_json(row["beta0"]);
      s.W = matrix_from_json(row["W"]);
      s.tree = parse_tree(row["tree"]);
      out.samples.push_back(std::move(s));
    }
  }
  if (out.samples.empty())
    throw IoError(model_dir + ": samples.jsonl holds no samples");
  return out;
}

MatrixXd grid_from_spec(const std::string& spec, int m_x) {
  std::vector<int> counts;
  std::string cell;
  std::istringstream ss(spec);
  while (std::getline(ss, cell, 'x')) {
    try {
      counts.push_back(std::stoi(cell));
    } catch (...) {
      throw ParamError("bad grid spec '" + spec + "'");
    }
  }
  while (static_cast<int>(counts.size()) > m_x && counts.back() == 1)
    counts.pop_back();
  if (static_cast<int>(counts.size()) != m_x)
    throw ParamError("grid spec '" + spec + "' does not match " +
                     std::to_string(m_x) + " input dimension(s)");
  long total = 1;
  for (int c : counts) {
    if (c < 1) throw ParamError("grid counts must be >= 1");
    total *= c;
    if (total > 2'000'000) throw ParamError("grid too large");
  }

  MatrixXd grid(total, m_x);
  for (long r = 0; r < total; ++r) {
    long rem = r;
    for (int j = m_x - 1; j >= 0; --j) {
      int idx = static_cast<int>(rem % counts[j]);
      rem /= counts[j];
      grid(r, j) = counts[j] == 1
                       ? 0.5
                       : static_cast<double>(idx) / (counts[j] - 1);
    }
  }
  return grid;
}

void cmd_fit(const std::string& config_path, std::ostream& log) {
  FitConfig cfg = FitConfig::parse_file(config_path);
  Dataset data = load_csv(cfg.data_path, cfg.response);
  log << "fit: " << data.n() << " rows, " << data.m_x() << " input(s), response '"
      << data.scale.z_name << "'\n";

  McmcConfig mc = cfg.mcmc;
  mc.hyper = cfg.resolve_hyper(data.m_x() + 1);
  mc.out_dir = cfg.out_dir;
  std::filesystem::create_directories(cfg.out_dir);
  mc.validate();

  FitResult fit = run_chains(data.X, data.Z, mc);
  write_fit_artifacts(cfg.out_dir, data, mc, fit);

  double mean_leaves = 0.0;
  for (const PosteriorSample& s : fit.samples) mean_leaves += s.tree.leaf_count();
  mean_leaves /= fit.samples.size();
  log << "fit: saved " << fit.samples.size() << " samples to " << cfg.out_dir
      << " (mean leaf count " << mean_leaves << ")\n";
  for (const auto& [name, counts] : fit.move_counts)
    log << "fit: " << name << " accepted " << counts.first << "/"
        << counts.second << "\n";
}

void cmd_predict(const std::string& model_dir, const std::string& grid_spec,
                 const std::string& queries_path,
                 const std::vector<double>& quantiles,
                 const std::string& out_path, uint64_t seed,
                 std::ostream& log) {
  ModelArtifacts model = load_model(model_dir);
  const int m_x = static_cast<int>(model.scale.x_min.size());

  MatrixXd xq_scaled;
  if (!grid_spec.empty()) {
    xq_scaled = grid_from_spec(grid_spec, m_x);
  } else if (!queries_path.empty()) {
    // match model input columns by name in the query header
    std::ifstream is(queries_path);
    if (!is) throw IoError("cannot open queries file: " + queries_path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty queries file");
    std::istringstream hs(line);
    std::vector<std::string> names;
    std::string cell;
    while (std::getline(hs, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
        cell.pop_back();
      names.push_back(cell);
    }
    std::vector<int> cols(m_x, -1);
    for (int j = 0; j < m_x; ++j) {
      for (size_t c = 0; c < names.size(); ++c)
        if (names[c] == model.scale.x_names[j]) cols[j] = static_cast<int>(c);
      if (cols[j] < 0)
        throw ParamError("queries file lacks model input column '" +
                         model.scale.x_names[j] + "'");
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      std::istringstream rs(line);
      std::vector<double> vals;
      while (std::getline(rs, cell, ',')) {
        try {
          vals.push_back(std::stod(cell));
        } catch (...) {
          throw IoError(queries_path + ": non-numeric cell '" + cell + "'");
        }
      }
      rows.push_back(std::move(vals));
    }
    MatrixXd raw(rows.size(), m_x);
    for (size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < m_x; ++j) {
        if (cols[j] >= static_cast<int>(rows[i].size()))
          throw IoError(queries_path + ": short row " + std::to_string(i + 2));
        raw(static_cast<int>(i), j) = rows[i][cols[j]];
      }
    xq_scaled = scale_inputs(raw, model.scale);
  } else {
    throw ParamError("predict needs either --grid or --queries");
  }

  bool outside = false;
  for (int i = 0; i < xq_scaled.rows() && !outside; ++i)
    for (int j = 0; j < m_x; ++j)
      if (xq_scaled(i, j) < 0.0 || xq_scaled(i, j) > 1.0) outside = true;
  if (outside)
    log << "warning: some query points fall outside the training cube "
           "(extrapolation)\n";

  std::vector<double> levels = quantiles;
  if (levels.empty()) levels = {0.05, 0.95};
  std::sort(levels.begin(), levels.end());

  PredictiveSummary summary =
      aggregate(xq_scaled, model.samples, model.X, model.Z, levels, seed,
                model.scale.z_mean, model.scale.z_sd);

  MatrixXd xq_raw = unscale_inputs(xq_scaled, model.scale);
  std::string path = out_path.empty() ? model_dir + "/predictions.csv" : out_path;
  std::ofstream os = open_out(path);

  // column layout: coordinates, mean, lower quantiles, median, upper ones
  size_t median_slot = 0;
  while (median_slot < levels.size() && levels[median_slot] < 0.5)
    ++median_slot;
  for (int j = 0; j < m_x; ++j) os << model.scale.x_names[j] << ',';
  os << "mean";
  for (size_t q = 0; q < levels.size(); ++q) {
    if (q == median_slot) os << ",median";
    os << ",q" << levels[q];
  }
  if (median_slot == levels.size()) os << ",median";
  os << "\n";
  for (int i = 0; i < xq_raw.rows(); ++i) {
    for (int j = 0; j < m_x; ++j) os << xq_raw(i, j) << ',';
    os << summary.mean[i];
    for (size_t q = 0; q < levels.size(); ++q) {
      if (q == median_slot) os << ',' << summary.median[i];
      os << ',' << summary.quantiles(i, static_cast<int>(q));
    }
    if (median_slot == levels.size()) os << ',' << summary.median[i];
    os << "\n";
  }
  log << "predict: wrote " << xq_raw.rows() << " rows to " << path << "\n";
}

CvReport cmd_cv(const std::string& config_path, int folds, double level,
                std::optional<uint64_t> seed, std::ostream& log) {
  FitConfig cfg = FitConfig::parse_file(config_path);
  Dataset data = load_csv(cfg.data_path, cfg.response);
  uint64_t s = seed.value_or(cfg.mcmc.seed);
  CvReport report = run_cv(data, cfg, folds, level, s, cfg.workers);

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream os = open_out(cfg.out_dir + "/cv_report.csv");
  os << "fold,n_heldout,covered,coverage\n";
  for (const FoldResult& fr : report.per_fold) {
    os << fr.fold << ',' << fr.n_heldout << ',' << fr.covered << ','
       << fr.coverage << "\n";
    log << "cv: fold " << fr.fold << " coverage " << fr.coverage << " ("
        << fr.covered << "/" << fr.n_heldout << ")\n";
  }
  os << "pooled," << report.pooled_total << ',' << report.pooled_covered << ','
     << report.pooled_coverage << "\n";
  log << "cv: pooled coverage " << report.pooled_coverage << " at level "
      << level << "\n";
  return report;
}

}  // namespace treegp
