//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/eval.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "synvia/rng.hpp"

namespace synvia {

using nlohmann::ordered_json;

SimilarityScores similarity_scores(const Molecule &a, const Molecule &b) {
  SimilarityScores s;
  s.morgan = tanimoto(morgan_fingerprint(a, 2, 4096), morgan_fingerprint(b, 2, 4096));
  s.scaffold = scaffold_similarity(a, b);
  return s;
}

EvalReport evaluate(const ModelParams &params, const BlockIndex &index,
                    const ExecutionContext &ctx,
                    const std::vector<std::pair<std::string, Molecule>> &dataset,
                    const EvalOptions &options) {
  if (dataset.empty()) throw DataError("empty evaluation dataset");
  EvalReport report;
  report.seed = options.decode.seed;
  report.samples_per_input = options.decode.samples_per_input;
  report.temperature = options.decode.temperature;
  report.top_k = options.decode.top_k;
  report.notes = options.notes;
  report.rows.resize(dataset.size());

  auto eval_one = [&](size_t i) {
    const auto &[name, mol] = dataset[i];
    EvalRow row;
    row.name = name;
    row.input_canonical = canonical_form(mol).text;
    DecodeOptions opts = options.decode;
    opts.seed = derive_seed(options.decode.seed, static_cast<uint64_t>(i));
    const ProjectionResult projection = project(params, index, ctx, mol, opts);
    row.statuses = projection.attempt_statuses;
    row.success = std::any_of(
        projection.attempt_statuses.begin(), projection.attempt_statuses.end(),
        [](ExecStatus s) { return s == ExecStatus::Success; });
    for (const Analog &a : projection.analogs)
      if (a.canonical == row.input_canonical) row.reconstructed = true;
    if (!projection.analogs.empty()) {
      const Analog &best = projection.analogs.front();
      row.sim_morgan = best.sim_morgan;
      row.sim_scaffold = best.sim_scaffold;
      row.best_program = best.program.to_json();
    }
    report.rows[i] = std::move(row);
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    for (size_t i = 0; i < dataset.size(); ++i) eval_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= dataset.size()) return;
          eval_one(i);
        }
      });
    }
    for (auto &t : pool) t.join();
  }

  double s = 0, r = 0, m = 0, sc = 0;
  for (const EvalRow &row : report.rows) {
    s += row.success ? 1 : 0;
    r += row.reconstructed ? 1 : 0;
    m += row.sim_morgan;
    sc += row.sim_scaffold;
  }
  const double n = static_cast<double>(report.rows.size());
  report.success_rate = s / n;
  report.reconstruction_rate = r / n;
  report.mean_sim_morgan = m / n;
  report.mean_sim_scaffold = sc / n;
  return report;
}

std::string EvalReport::to_json() const {
  ordered_json j;
  j["success_rate"] = success_rate;
  j["reconstruction_rate"] = reconstruction_rate;
  j["mean_sim_morgan"] = mean_sim_morgan;
  j["mean_sim_scaffold"] = mean_sim_scaffold;
  j["sim_gobbi"] = sim_gobbi;
  j["config"] = {{"seed", seed},
                 {"samples_per_input", samples_per_input},
                 {"temperature", temperature},
                 {"top_k", top_k},
                 {"scaffold_fp_bits", scaffold_fp_bits},
                 {"test_index_includes_heldout_blocks", true},
                 {"notes", notes}};
  ordered_json rows_json = ordered_json::array();
  for (const EvalRow &row : rows) {
    ordered_json r;
    r["name"] = row.name;
    r["input"] = row.input_canonical;
    r["success"] = row.success;
    r["reconstructed"] = row.reconstructed;
    r["sim_morgan"] = row.sim_morgan;
    r["sim_scaffold"] = row.sim_scaffold;
    ordered_json statuses = ordered_json::array();
    for (ExecStatus s : row.statuses) statuses.push_back(to_string(s));
    r["statuses"] = statuses;
    if (!row.best_program.empty())
      r["best_program"] = ordered_json::parse(row.best_program);
    rows_json.push_back(std::move(r));
  }
  j["rows"] = std::move(rows_json);
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-22s %10s\n", "metric", "value");
  out << line;
  std::snprintf(line, sizeof(line), "%-22s %9.4f\n", "success_rate", success_rate);
  out << line;
  std::snprintf(line, sizeof(line), "%-22s %9.4f\n", "reconstruction_rate",
                reconstruction_rate);
  out << line;
  std::snprintf(line, sizeof(line), "%-22s %9.4f\n", "sim_morgan", mean_sim_morgan);
  out << line;
  std::snprintf(line, sizeof(line), "%-22s %9.4f\n", "sim_scaffold",
                mean_sim_scaffold);
  out << line;
  std::snprintf(line, sizeof(line), "%-22s %10s\n", "sim_gobbi", sim_gobbi.c_str());
  out << line;
  std::snprintf(line, sizeof(line), "%-22s %10zu\n", "molecules", rows.size());
  out << line;
  return out.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "name,input,success,reconstructed,sim_morgan,sim_scaffold\n";
  for (const EvalRow &row : rows) {
    out << row.name << ',' << row.input_canonical << ','
        << (row.success ? 1 : 0) << ',' << (row.reconstructed ? 1 : 0) << ','
        << row.sim_morgan << ',' << row.sim_scaffold << "\n";
  }
  return out.str();
}

}  // namespace synvia
