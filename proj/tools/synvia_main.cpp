//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "synvia/bbindex.hpp"
#include "synvia/eval.hpp"
#include "synvia/infer.hpp"
#include "synvia/rng.hpp"
#include "synvia/sampler.hpp"
#include "synvia/training.hpp"

namespace {

using namespace synvia;
using nlohmann::ordered_json;

void log_info(const std::string &msg) { std::cerr << "[synvia] " << msg << "\n"; }

void write_file_atomic(const std::string &path, const std::string &content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write on " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot rename into place: " + path);
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonPaths {
  std::string catalog_path;
  std::string templates_path;
};

struct LoadedData {
  std::vector<ReactionTemplate> templates;
  Catalog catalog;
};

LoadedData load_data(const CommonPaths &paths) {
  LoadedData data;
  data.templates = load_templates(paths.templates_path);
  CatalogReport report;
  data.catalog = Catalog::load(paths.catalog_path, data.templates, &report);
  for (const auto &[id, reason] : report.rejected)
    log_info("catalog: rejected " + id + ": " + reason);
  for (const auto &id : report.duplicates_removed)
    log_info("catalog: removed duplicate " + id);
  for (const auto &id : report.unmatched_removed)
    log_info("catalog: removed template-unmatched " + id);
  if (data.catalog.empty()) throw DataError("catalog is empty after preprocessing");
  log_info("catalog: " + std::to_string(data.catalog.size()) + " blocks, " +
           std::to_string(data.templates.size()) + " templates");
  return data;
}

std::vector<int> read_id_list(const std::string &path, const Catalog &catalog) {
  std::istringstream in(read_file(path));
  std::vector<int> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const int dense = catalog.find(line);
    if (dense < 0)
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": unknown block id '" + line + "'");
    ids.push_back(dense);
  }
  return ids;
}

std::vector<std::pair<std::string, Molecule>> read_dataset(const std::string &path) {
  std::istringstream in(read_file(path));
  std::vector<std::pair<std::string, Molecule>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::string name = "row" + std::to_string(line_no);
    std::string smiles = line;
    if (line[0] == '{') {
      const auto j = nlohmann::json::parse(line);
      if (!j.contains("product_smiles"))
        throw DataError(path + " line " + std::to_string(line_no) +
                        ": JSON record lacks product_smiles");
      smiles = j["product_smiles"].get<std::string>();
      if (j.contains("seed")) name = "seed" + std::to_string(j["seed"].get<uint64_t>());
    } else if (const size_t tab = line.find('\t'); tab != std::string::npos) {
      name = line.substr(0, tab);
      smiles = line.substr(tab + 1);
    }
    out.emplace_back(name, parse_smiles(smiles));
  }
  if (out.empty()) throw DataError("empty dataset: " + path);
  return out;
}

BlockIndex build_or_verify_index(const Catalog &catalog,
                                 const std::string &index_path) {
  BlockIndex built = BlockIndex::build(catalog);
  if (!index_path.empty()) {
    const BlockIndex loaded = BlockIndex::load(index_path);
    if (loaded.size() != built.size())
      throw DataError("index file does not match the catalog (size)");
    for (int i = 0; i < built.size(); ++i) {
      if (loaded.id(i) != built.id(i) || !(loaded.row(i) == built.row(i)))
        throw DataError("index file does not match the catalog at row " +
                        std::to_string(i));
    }
    log_info("index file verified against the catalog");
  }
  return built;
}

ModelParams load_checkpoint_for(const std::string &path,
                                const std::vector<ReactionTemplate> &templates) {
  ModelParams params = ModelParams::load(path);
  if (params.config.n_reaction_types != static_cast<int>(templates.size()))
    throw DataError("checkpoint expects " +
                    std::to_string(params.config.n_reaction_types) +
                    " reaction types but the template file has " +
                    std::to_string(templates.size()));
  return params;
}

ordered_json analog_json(const Analog &a) {
  ordered_json j;
  j["product"] = a.canonical;
  j["fp256"] = morgan_fingerprint(a.product, 2, 256).to_hex();
  j["sim_morgan"] = a.sim_morgan;
  j["sim_scaffold"] = a.sim_scaffold;
  j["sim_gobbi"] = "unsupported";
  j["program"] = ordered_json::parse(a.program.to_json());
  if (!std::isnan(a.external_score)) j["score"] = a.external_score;
  return j;
}

// ---------------------------------------------------------------------------

int cmd_sample_data(const CommonPaths &paths, int n, uint64_t seed, int m_r,
                    int m_a, const std::string &restrict_path, int workers,
                    const std::string &out_path) {
  const LoadedData data = load_data(paths);
  std::optional<std::vector<int>> restrict_ids;
  if (!restrict_path.empty())
    restrict_ids = read_id_list(restrict_path, data.catalog);
  const EligibilityIndex index =
      build_eligibility_index(data.catalog, data.templates, restrict_ids);
  for (const auto &[t, s] : index.empty_slots)
    log_info("warning: template " + data.templates[static_cast<size_t>(t)].id +
             " slot " + std::to_string(s) + " has no eligible blocks");
  const ExecutionContext ctx{data.catalog, data.templates};
  SamplerLimits limits;
  limits.max_reactions = m_r;
  limits.max_atoms = m_a;

  // Each record has its own derived seed, so any worker count produces the
  // same bytes.
  std::vector<std::string> lines(static_cast<size_t>(n));
  auto sample_one = [&](int i) {
    const uint64_t record_seed = derive_seed(seed, static_cast<uint64_t>(i));
    const SampledPathway pw = sample_pathway(index, ctx, limits, record_seed);
    ordered_json j;
    j["program"] = ordered_json::parse(pw.program.to_json());
    j["product_smiles"] = canonical_form(pw.product).text;
    j["seed"] = record_seed;
    lines[static_cast<size_t>(i)] = j.dump();
  };
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) sample_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= n) return;
          sample_one(i);
        }
      });
    for (auto &t : pool) t.join();
  }
  std::ostringstream out;
  for (const std::string &line : lines) out << line << "\n";
  write_file_atomic(out_path, out.str());
  log_info("wrote " + std::to_string(n) + " pathways to " + out_path);
  return 0;
}

int cmd_build_index(const CommonPaths &paths, const std::string &out_path) {
  const LoadedData data = load_data(paths);
  const BlockIndex index = BlockIndex::build(data.catalog);
  index.save(out_path);
  log_info("wrote index of " + std::to_string(index.size()) + " blocks to " +
           out_path);
  return 0;
}

int cmd_split(const CommonPaths &paths, int k, uint64_t seed, int test_cluster,
              bool stricter, double threshold, const std::string &train_out,
              const std::string &test_out) {
  const LoadedData data = load_data(paths);
  const BlockIndex index = BlockIndex::build(data.catalog);
  const SplitResult split = kmeans_split(index, k, seed, test_cluster);
  std::vector<int> test_ids = split.test_ids;
  log_info("split: " + std::to_string(split.train_ids.size()) + " train, " +
           std::to_string(test_ids.size()) + " test blocks");
  if (stricter) {
    test_ids = max_train_similarity_filter(data.catalog, test_ids,
                                           split.train_ids, threshold);
    log_info("stricter filter kept " + std::to_string(test_ids.size()) +
             " test blocks at threshold " + std::to_string(threshold));
  }
  std::ostringstream train_lines, test_lines;
  for (int i : split.train_ids) train_lines << data.catalog.block(i).id << "\n";
  for (int i : test_ids) test_lines << data.catalog.block(i).id << "\n";
  write_file_atomic(train_out, train_lines.str());
  write_file_atomic(test_out, test_lines.str());
  return 0;
}

int cmd_train(const CommonPaths &paths, const ModelConfig &config_in,
              const TrainOptions &options_in, const std::string &train_ids_path,
              const std::string &init_checkpoint, const std::string &out_path) {
  const LoadedData data = load_data(paths);
  ModelConfig config = config_in;
  config.n_reaction_types = static_cast<int>(data.templates.size());
  ModelParams params = init_checkpoint.empty()
                           ? ModelParams::init(config)
                           : load_checkpoint_for(init_checkpoint, data.templates);
  std::optional<std::vector<int>> restrict_ids;
  if (!train_ids_path.empty())
    restrict_ids = read_id_list(train_ids_path, data.catalog);
  const EligibilityIndex index =
      build_eligibility_index(data.catalog, data.templates, restrict_ids);
  const ExecutionContext ctx{data.catalog, data.templates};
  const TrainResult result = train_model(params, index, ctx, options_in, &std::cerr);
  params.save(out_path);
  log_info("final loss " + std::to_string(result.last.total) + "; checkpoint at " +
           out_path);
  return 0;
}

int cmd_exec(const CommonPaths &paths, const std::string &program_path) {
  const LoadedData data = load_data(paths);
  const ExecutionContext ctx{data.catalog, data.templates};
  std::istringstream in(read_file(program_path));
  std::string line;
  int failures = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const PostfixProgram prog = PostfixProgram::from_json(line);
    const ExecutionResult result = execute(prog, ctx);
    if (result.status == ExecStatus::Success) {
      std::cout << canonical_form(*result.product).text << "\n";
    } else {
      std::cout << "FAIL " << to_string(result.status) << "\n";
      ++failures;
    }
  }
  return failures == 0 ? 0 : 2;
}

int cmd_project(const CommonPaths &paths, const std::string &checkpoint,
                const std::string &index_path, const std::string &input,
                const DecodeOptions &opts, const std::string &out_path) {
  const LoadedData data = load_data(paths);
  const ModelParams params = load_checkpoint_for(checkpoint, data.templates);
  const BlockIndex index = build_or_verify_index(data.catalog, index_path);
  const ExecutionContext ctx{data.catalog, data.templates};

  std::vector<std::pair<std::string, Molecule>> inputs;
  if (!input.empty() && input[0] == '@')
    inputs = read_dataset(input.substr(1));
  else
    inputs.emplace_back("input", parse_smiles(input));

  ordered_json report = ordered_json::array();
  for (size_t i = 0; i < inputs.size(); ++i) {
    DecodeOptions per = opts;
    per.seed = derive_seed(opts.seed, static_cast<uint64_t>(i));
    const ProjectionResult projection =
        project(params, index, ctx, inputs[i].second, per);
    ordered_json entry;
    entry["name"] = inputs[i].first;
    entry["input"] = canonical_form(inputs[i].second).text;
    ordered_json analogs = ordered_json::array();
    for (const Analog &a : projection.analogs) analogs.push_back(analog_json(a));
    entry["analogs"] = std::move(analogs);
    ordered_json statuses = ordered_json::array();
    for (ExecStatus s : projection.attempt_statuses)
      statuses.push_back(to_string(s));
    entry["statuses"] = std::move(statuses);
    report.push_back(std::move(entry));
  }
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_file_atomic(out_path, text);
  return 0;
}

int cmd_expand(const CommonPaths &paths, const std::string &checkpoint,
               const std::string &index_path, const std::string &hit, int n,
               const DecodeOptions &opts, const std::string &score_cmd,
               const std::string &out_path) {
  const LoadedData data = load_data(paths);
  const ModelParams params = load_checkpoint_for(checkpoint, data.templates);
  const BlockIndex index = build_or_verify_index(data.catalog, index_path);
  const ExecutionContext ctx{data.catalog, data.templates};
  const Molecule hit_mol = parse_smiles(hit);
  const ProjectionResult result =
      expand_hit(params, index, ctx, hit_mol, n, opts, score_cmd);

  ordered_json report;
  report["hit"] = canonical_form(hit_mol).text;
  report["attempts"] = n;
  int successes = 0;
  for (ExecStatus s : result.attempt_statuses)
    if (s == ExecStatus::Success) ++successes;
  report["successful_attempts"] = successes;
  report["unique_analogs"] = result.analogs.size();
  ordered_json analogs = ordered_json::array();
  for (const Analog &a : result.analogs) analogs.push_back(analog_json(a));
  report["analogs"] = std::move(analogs);
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_file_atomic(out_path, text);
  return 0;
}

int cmd_evaluate(const CommonPaths &paths, const std::string &checkpoint,
                 const std::string &index_path, const std::string &dataset_path,
                 const EvalOptions &options, const std::string &out_path,
                 const std::string &csv_path) {
  const LoadedData data = load_data(paths);
  const ModelParams params = load_checkpoint_for(checkpoint, data.templates);
  const BlockIndex index = build_or_verify_index(data.catalog, index_path);
  const ExecutionContext ctx{data.catalog, data.templates};
  const auto dataset = read_dataset(dataset_path);
  const EvalReport report = evaluate(params, index, ctx, dataset, options);
  std::cerr << report.to_table();
  if (!out_path.empty()) write_file_atomic(out_path, report.to_json() + "\n");
  if (!csv_path.empty()) write_file_atomic(csv_path, report.to_csv());
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Synthesis pathways as stack programs: sampling, training, "
               "projection and evaluation"};
  app.require_subcommand(1);

  CommonPaths paths;

  // sample-data
  auto *sample = app.add_subcommand("sample-data", "Sample (program, product) pairs");
  int sample_n = 1000, sample_mr = 5, sample_ma = 80, sample_workers = 1;
  uint64_t sample_seed = 0;
  std::string sample_out = "pathways.jsonl", sample_restrict;
  sample->add_option("--catalog", paths.catalog_path)->required();
  sample->add_option("--templates", paths.templates_path)->required();
  sample->add_option("--n", sample_n, "Number of pathways");
  sample->add_option("--seed", sample_seed);
  sample->add_option("--mr", sample_mr, "Maximum reactions per pathway");
  sample->add_option("--ma", sample_ma, "Maximum atoms in the running product");
  sample->add_option("--restrict-ids", sample_restrict,
                     "File of block ids; sampling uses only these blocks");
  sample->add_option("--workers", sample_workers);
  sample->add_option("--out", sample_out)->required();

  // build-index
  auto *build = app.add_subcommand("build-index", "Write the retrieval index file");
  std::string build_out = "blocks.svbi";
  build->add_option("--catalog", paths.catalog_path)->required();
  build->add_option("--templates", paths.templates_path)->required();
  build->add_option("--out", build_out)->required();

  // split
  auto *split = app.add_subcommand("split", "K-means train/test split over blocks");
  int split_k = 128, split_test_cluster = 0;
  uint64_t split_seed = 0;
  bool split_stricter = false;
  double split_threshold = 0.6;
  std::string split_train_out = "train_ids.txt", split_test_out = "test_ids.txt";
  split->add_option("--catalog", paths.catalog_path)->required();
  split->add_option("--templates", paths.templates_path)->required();
  split->add_option("--k", split_k);
  split->add_option("--seed", split_seed);
  split->add_option("--test-cluster", split_test_cluster);
  split->add_flag("--stricter", split_stricter,
                  "Drop test blocks too similar to the training set");
  split->add_option("--threshold", split_threshold);
  split->add_option("--out-train", split_train_out)->required();
  split->add_option("--out-test", split_test_out)->required();

  // train
  auto *train = app.add_subcommand("train", "Train the encoder-decoder model");
  ModelConfig train_config;
  TrainOptions train_options;
  std::string train_ids_path, train_out = "model.svck", train_init;
  train->add_option("--catalog", paths.catalog_path)->required();
  train->add_option("--templates", paths.templates_path)->required();
  train->add_option("--steps", train_options.steps);
  train->add_option("--batch", train_options.batch_size);
  train->add_option("--lr", train_options.adamw.lr);
  train->add_option("--weight-decay", train_options.adamw.weight_decay);
  train->add_option("--seed", train_options.seed);
  train->add_option("--pool", train_options.pool,
                    "Cycle over this many fixed pathways (0 = fresh data)");
  train->add_option("--mr", train_options.limits.max_reactions);
  train->add_option("--ma", train_options.limits.max_atoms);
  train->add_option("--d-model", train_config.d_model);
  train->add_option("--heads", train_config.n_heads);
  train->add_option("--enc-layers", train_config.n_encoder_layers);
  train->add_option("--dec-layers", train_config.n_decoder_layers);
  train->add_option("--max-seq", train_config.max_seq_len);
  train->add_option("--ffn-mult", train_config.ffn_mult);
  train->add_option("--model-seed", train_config.seed);
  train->add_option("--train-ids", train_ids_path,
                    "Restrict sampling to these block ids");
  train->add_option("--init-checkpoint", train_init, "Resume from a checkpoint");
  train->add_option("--log-every", train_options.log_every);
  train->add_option("--checkpoint", train_out)->required();

  // shared decode flags builder
  auto add_decode_flags = [](CLI::App *cmd, DecodeOptions &opts) {
    cmd->add_option("--samples", opts.samples_per_input);
    cmd->add_option("--temperature", opts.temperature);
    cmd->add_option("--top-k", opts.top_k);
    cmd->add_option("--max-len", opts.max_len);
    cmd->add_option("--seed", opts.seed);
    cmd->add_flag("--branch-ranks", opts.branch_product_rank,
                  "Sample among candidate products instead of rank 0");
    cmd->add_flag("--argmax-reaction", opts.argmax_reaction);
  };

  // project
  auto *project_cmd = app.add_subcommand("project", "Project molecules into the space");
  std::string project_checkpoint, project_input, project_out, project_index;
  DecodeOptions project_opts;
  project_cmd->add_option("--catalog", paths.catalog_path)->required();
  project_cmd->add_option("--templates", paths.templates_path)->required();
  project_cmd->add_option("--checkpoint", project_checkpoint)->required();
  project_cmd->add_option("--index", project_index,
                          "Optional index file, verified against the catalog");
  project_cmd->add_option("--input", project_input,
                          "SMILES, or @file with one molecule per line")
      ->required();
  add_decode_flags(project_cmd, project_opts);
  project_cmd->add_option("--out", project_out);

  // expand
  auto *expand_cmd = app.add_subcommand("expand", "Hit expansion around a molecule");
  std::string expand_checkpoint, expand_hit_smiles, expand_out, expand_score,
      expand_index;
  int expand_n = 500;
  DecodeOptions expand_opts;
  expand_opts.temperature = 1.2;
  expand_opts.top_k = 3;
  expand_cmd->add_option("--catalog", paths.catalog_path)->required();
  expand_cmd->add_option("--templates", paths.templates_path)->required();
  expand_cmd->add_option("--checkpoint", expand_checkpoint)->required();
  expand_cmd->add_option("--index", expand_index);
  expand_cmd->add_option("--hit", expand_hit_smiles)->required();
  expand_cmd->add_option("--n", expand_n);
  add_decode_flags(expand_cmd, expand_opts);
  expand_cmd->add_option("--score-cmd", expand_score,
                         "External scorer: canonical text on stdin, score on stdout");
  expand_cmd->add_option("--out", expand_out);

  // evaluate
  auto *eval_cmd = app.add_subcommand("evaluate", "Benchmark metrics over a dataset");
  std::string eval_checkpoint, eval_dataset, eval_out, eval_csv, eval_index,
      eval_notes;
  EvalOptions eval_options;
  eval_cmd->add_option("--catalog", paths.catalog_path)->required();
  eval_cmd->add_option("--templates", paths.templates_path)->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
  eval_cmd->add_option("--index", eval_index);
  eval_cmd->add_option("--dataset", eval_dataset)->required();
  add_decode_flags(eval_cmd, eval_options.decode);
  eval_cmd->add_option("--workers", eval_options.workers);
  eval_cmd->add_option("--notes", eval_notes);
  eval_cmd->add_option("--out", eval_out);
  eval_cmd->add_option("--csv", eval_csv);

  // exec
  auto *exec_cmd = app.add_subcommand("exec", "Run program files on the stack machine");
  std::string exec_program;
  exec_cmd->add_option("--catalog", paths.catalog_path)->required();
  exec_cmd->add_option("--templates", paths.templates_path)->required();
  exec_cmd->add_option("--program", exec_program)->required();

  // Flat key=value config file: `--config FILE` anywhere on the line expands
  // to --key value pairs; explicit flags win over file entries.
  std::vector<std::string> argv_expanded;
  try {
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--config") {
        if (i + 1 >= argc) throw DataError("--config requires a file");
        config_path = argv[++i];
      } else {
        argv_expanded.push_back(a);
      }
    }
    if (!config_path.empty()) {
      std::istringstream in(read_file(config_path));
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
          throw DataError("config line is not key=value: " + line);
        const std::string key = "--" + line.substr(0, eq);
        if (std::find(argv_expanded.begin(), argv_expanded.end(), key) !=
            argv_expanded.end())
          continue;  // the flag wins
        argv_expanded.push_back(key);
        argv_expanded.push_back(line.substr(eq + 1));
      }
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::vector<const char *> argv_ptrs{argv[0]};
  for (const std::string &a : argv_expanded) argv_ptrs.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv_ptrs.size()), argv_ptrs.data());
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (*sample)
      return cmd_sample_data(paths, sample_n, sample_seed, sample_mr, sample_ma,
                             sample_restrict, sample_workers, sample_out);
    if (*build) return cmd_build_index(paths, build_out);
    if (*split)
      return cmd_split(paths, split_k, split_seed, split_test_cluster,
                       split_stricter, split_threshold, split_train_out,
                       split_test_out);
    if (*train)
      return cmd_train(paths, train_config, train_options, train_ids_path,
                       train_init, train_out);
    if (*project_cmd)
      return cmd_project(paths, project_checkpoint, project_index, project_input,
                         project_opts, project_out);
    if (*expand_cmd)
      return cmd_expand(paths, expand_checkpoint, expand_index, expand_hit_smiles,
                        expand_n, expand_opts, expand_score, expand_out);
    if (*eval_cmd) {
      eval_options.notes = eval_notes;
      return cmd_evaluate(paths, eval_checkpoint, eval_index, eval_dataset,
                          eval_options, eval_out, eval_csv);
    }
    if (*exec_cmd) return cmd_exec(paths, exec_program);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
