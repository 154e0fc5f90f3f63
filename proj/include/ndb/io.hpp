#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndb/errors.hpp"
#include "ndb/harness.hpp"
#include "ndb/net.hpp"

namespace ndb {

namespace detail {

// Shortest round-tripping decimal representation.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double parsed = 0.0;
  std::sscanf(buf, "%lf", &parsed);
  if (parsed == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &parsed);
      if (parsed == v) return shorter;
    }
  }
  return buf;
}

inline void check_trace_invariants(const RegretTrace& trace) {
  double prev_avg = 0.0, prev_weak = 0.0;
  for (std::size_t t = 0; t < trace.avg_cum.size(); ++t) {
    if (trace.avg_cum[t] < prev_avg || trace.weak_cum[t] < prev_weak)
      throw NumericalError("trace invariant violated: cumulative regret decreased");
    if (trace.weak_cum[t] > trace.avg_cum[t])
      throw NumericalError("trace invariant violated: weak regret above average");
    prev_avg = trace.avg_cum[t];
    prev_weak = trace.weak_cum[t];
  }
}

}  // namespace detail

inline void write_trace_csv(const std::string& path, const std::vector<RegretTrace>& traces) {
  if (traces.empty()) throw InputError("write_trace_csv: no traces");
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw InputError("write_trace_csv: cannot open " + path);
  out << "rep,round,avg_regret_cum,weak_regret_cum\n";
  for (const auto& trace : traces) {
    detail::check_trace_invariants(trace);
    for (std::size_t t = 0; t < trace.avg_cum.size(); ++t) {
      out << trace.rep << ',' << (t + 1) << ',' << detail::format_double(trace.avg_cum[t])
          << ',' << detail::format_double(trace.weak_cum[t]) << '\n';
    }
  }
  if (!out) throw InputError("write_trace_csv: write failed for " + path);
}

inline std::vector<RegretTrace> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("read_trace_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "rep,round,avg_regret_cum,weak_regret_cum")
    throw InputError("read_trace_csv: bad header in " + path);
  std::vector<RegretTrace> traces;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');
    const int rep = std::stoi(field);
    std::getline(row, field, ',');
    const long round = std::stol(field);
    std::getline(row, field, ',');
    const double avg = std::stod(field);
    std::getline(row, field, ',');
    const double weak = std::stod(field);
    if (traces.empty() || traces.back().rep != rep) {
      traces.push_back(RegretTrace{{}, {}, rep, 0});
    }
    auto& trace = traces.back();
    if (round != static_cast<long>(trace.avg_cum.size()) + 1)
      throw InputError("read_trace_csv: rounds out of order in " + path);
    trace.avg_cum.push_back(avg);
    trace.weak_cum.push_back(weak);
  }
  return traces;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["policy"] = policy_name(cfg.policy);
  j["function"] = cfg.function_kind == RewardKind::square        ? "square"
                  : cfg.function_kind == RewardKind::cosine_inner ? "cosine"
                                                                   : "cosine-outer";
  j["scale"] = cfg.function_scale;
  j["T"] = cfg.T;
  j["K"] = cfg.K;
  j["d"] = cfg.d;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["lambda"] = cfg.lambda;
  j["kappa_mu"] = cfg.kappa_mu;
  j["nu_mode"] = cfg.nu_mode == NuMode::fixed ? "fixed" : "theoretical";
  j["nu"] = cfg.nu;
  j["delta"] = cfg.delta;
  j["B"] = cfg.B;
  j["width"] = cfg.width;
  j["depth"] = cfg.depth;
  j["learning_rate"] = cfg.learning_rate;
  j["grad_steps"] = cfg.grad_steps;
  j["retrain_every"] = cfg.retrain_every;
  j["feature_anchor"] = cfg.anchor == FeatureAnchor::theta_t ? "theta_t" : "theta_0";
  j["context_mode"] = cfg.context_mode == ContextMode::raw ? "raw" : "theory";
  j["regularizer"] =
      cfg.regularizer == RegularizerMode::practical ? "practical" : "theoretical";
  j["threads"] = cfg.threads;
  j["diagnostics"] = cfg.diagnostics;
  return j;
}

inline void write_summary_json(const std::string& path, const Summary& summary,
                               const ExperimentConfig& cfg,
                               const RunDiagnostics* diag = nullptr) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["avg_regret_mean"] = summary.avg_mean;
  j["avg_regret_halfwidth"] = summary.avg_halfwidth;
  j["weak_regret_mean"] = summary.weak_mean;
  j["weak_regret_halfwidth"] = summary.weak_halfwidth;
  if (diag != nullptr && cfg.diagnostics) {
    nlohmann::json d;
    d["effective_dimension"] = diag->eff_dim;
    d["log_det_ratio"] = diag->log_det_ratio;
    d["coverage_events"] = diag->coverage_events;
    d["coverage_violations"] = diag->coverage_violations;
    d["coverage_violation_rate"] = diag->coverage_violation_rate();
    if (std::isfinite(diag->final_train_loss)) {
      d["final_train_loss"] = diag->final_train_loss;
      d["final_grad_norm"] = diag->final_grad_norm;
    }
    j["diagnostics"] = d;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("write_summary_json: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out) throw InputError("write_summary_json: write failed for " + path);
}

// Minimal static plot: mean curves with a shaded confidence band.
inline void write_curves_svg(const std::string& path, const Summary& summary,
                             const ExperimentConfig& cfg) {
  const std::size_t T = summary.avg_mean.size();
  if (T == 0) throw InputError("write_curves_svg: empty summary");
  const double w = 720.0, h = 480.0, mleft = 60.0, mbottom = 40.0, mtop = 20.0, mright = 20.0;
  double ymax = 1e-9;
  for (std::size_t t = 0; t < T; ++t)
    ymax = std::max(ymax, summary.avg_mean[t] + summary.avg_halfwidth[t]);

  auto xpix = [&](double t) { return mleft + (w - mleft - mright) * t / static_cast<double>(T); };
  auto ypix = [&](double v) { return h - mbottom - (h - mbottom - mtop) * v / ymax; };

  auto polyline = [&](const std::vector<double>& mean, const std::vector<double>& half,
                      const char* color, std::ostringstream& svg) {
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (std::size_t t = 0; t < T; ++t)
      svg << xpix(static_cast<double>(t + 1)) << ',' << ypix(mean[t] + half[t]) << ' ';
    for (std::size_t t = T; t-- > 0;)
      svg << xpix(static_cast<double>(t + 1)) << ',' << ypix(std::max(0.0, mean[t] - half[t]))
          << ' ';
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = 0; t < T; ++t)
      svg << xpix(static_cast<double>(t + 1)) << ',' << ypix(mean[t]) << ' ';
    svg << "\"/>\n";
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << mleft << "\" y1=\"" << (h - mbottom) << "\" x2=\"" << (w - mright)
      << "\" y2=\"" << (h - mbottom) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << mleft << "\" y1=\"" << mtop << "\" x2=\"" << mleft << "\" y2=\""
      << (h - mbottom) << "\" stroke=\"black\"/>\n";
  polyline(summary.avg_mean, summary.avg_halfwidth, "#c0392b", svg);
  polyline(summary.weak_mean, summary.weak_halfwidth, "#2980b9", svg);
  svg << "<text x=\"" << (mleft + 10) << "\" y=\"" << (mtop + 14)
      << "\" font-family=\"sans-serif\" font-size=\"13\">" << policy_name(cfg.policy)
      << " cumulative regret (red: average, blue: weak), T=" << cfg.T << ", reps=" << cfg.reps
      << "</text>\n";
  svg << "<text x=\"" << (w / 2) << "\" y=\"" << (h - 10)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">round</text>\n";
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("write_curves_svg: cannot open " + path);
  out << svg.str();
  if (!out) throw InputError("write_curves_svg: write failed for " + path);
}

// Emits trace.csv, summary.json and (optionally) curves.svg under dir.
inline void write_outputs(const std::vector<RegretTrace>& traces, const Summary& summary,
                          const ExperimentConfig& cfg, const std::string& dir,
                          const RunDiagnostics* diag = nullptr) {
  if (traces.empty()) throw InputError("write_outputs: refusing to write empty traces");
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_trace_csv((base / "trace.csv").string(), traces);
  write_summary_json((base / "summary.json").string(), summary, cfg, diag);
  if (cfg.emit_svg) write_curves_svg((base / "curves.svg").string(), summary, cfg);
}

// Checkpoint format: "NDBW" magic, u32 version, i32 depth/width/input_dim,
// then the flattened weights (layer order, column-major) as little-endian
// f64.
inline void save_checkpoint(const std::string& path, const NetworkShape& shape,
                            const NetworkParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("save_checkpoint: cannot open " + path);
  out.write("NDBW", 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::int32_t meta[3] = {shape.depth, shape.width, shape.input_dim};
  out.write(reinterpret_cast<const char*>(meta), sizeof(meta));
  const Eigen::VectorXd flat = params.flatten();
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(flat.size())));
  if (!out) throw InputError("save_checkpoint: write failed for " + path);
}

inline std::pair<NetworkShape, NetworkParams> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "NDBW")
    throw InputError("load_checkpoint: bad magic in " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != 1) throw InputError("load_checkpoint: unsupported version");
  std::int32_t meta[3];
  in.read(reinterpret_cast<char*>(meta), sizeof(meta));
  NetworkShape shape{meta[0], meta[1], meta[2]};
  shape.validate();
  Eigen::VectorXd flat(shape.param_count());
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(flat.size())));
  if (!in) throw InputError("load_checkpoint: truncated file " + path);

  RandomStream dummy(0);
  NetworkParams params = init_symmetric(dummy, shape);
  params.set_from_flat(flat);
  return {shape, params};
}

}  // namespace ndb
