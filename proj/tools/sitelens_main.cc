// Operator command line for the sitelens pipeline. Each stage reads and
// writes files and prints a one-line JSON run manifest on stdout.

#include <chrono>
#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "sitelens/domain_name.h"
#include "sitelens/error.h"
#include "sitelens/features.h"
#include "sitelens/filterlist.h"
#include "sitelens/hash.h"
#include "sitelens/jwt.h"
#include "sitelens/model.h"
#include "sitelens/select.h"
#include "sitelens/service.h"
#include "sitelens/synth.h"
#include "sitelens/telemetry.h"

#ifndef SITELENS_DATA_DIR
#define SITELENS_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sitelens;

namespace {

const fs::path kDataDir = SITELENS_DATA_DIR;

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw DataError("write failed for " + path.string());
}

std::string HashFile(const fs::path& path) { return Sha256Hex(ReadFile(path)); }

json ReadJsonFile(const fs::path& path) {
  json j = json::parse(ReadFile(path), nullptr, false);
  if (j.is_discarded())
    throw DataError(path.string() + ": not valid JSON");
  return j;
}

// Collects what a command read and wrote, then prints it.
struct Manifest {
  std::string command;
  json seed = nullptr;
  json config = json::object();
  json artifacts = json::object();
  json result = json::object();

  void Input(const std::string& role, const fs::path& path) {
    config[role] = path.string();
    artifacts[role] = HashFile(path);
  }
  void Output(const std::string& role, const fs::path& path) {
    config[role] = path.string();
    artifacts[role] = HashFile(path);
  }
  void Print() const {
    json out = {{"command", command}, {"seed", seed},     {"config", config},
                {"artifacts", artifacts}, {"result", result}};
    std::cout << out.dump() << std::endl;
  }
};

FeatureCatalog LoadCatalogOrDefault(const std::string& path) {
  return path.empty() ? FeatureCatalog::Load(kDataDir / "feature_catalog.tsv")
                      : FeatureCatalog::Load(path);
}

CategoryList LoadCategoriesOrDefault(const std::string& path) {
  return path.empty() ? CategoryList::Load(kDataDir / "category_list.tsv")
                      : CategoryList::Load(path);
}

fs::path CatalogPath(const std::string& path) {
  return path.empty() ? kDataDir / "feature_catalog.tsv" : fs::path(path);
}
fs::path CategoriesPath(const std::string& path) {
  return path.empty() ? kDataDir / "category_list.tsv" : fs::path(path);
}

void WriteMaybeGzip(const fs::path& path, const std::string& text, bool gzip) {
  WriteFile(path, gzip ? GzipCompress(text) : text);
}

std::string ReadMaybeGzip(const fs::path& path) {
  std::string bytes = ReadFile(path);
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
      static_cast<unsigned char>(bytes[1]) == 0x8b)
    return GzipDecompress(bytes);
  return bytes;
}

volatile std::sig_atomic_t g_stop = 0;
void HandleSignal(int) { g_stop = 1; }

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 2;
    case ErrorKind::kData: return 3;
    case ErrorKind::kInvariant: return 4;
  }
  return 4;
}

int ReportError(std::string_view kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump()
            << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sitelens: content-agnostic fake news website detection"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // synth
  std::string synth_config, synth_out;
  std::optional<uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a calibrated synthetic dataset");
  synth->add_option("--config", synth_config, "JSON generator config (defaults if omitted)")
      ->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "Override the config seed");
  synth->add_option("--out", synth_out, "Output JSONL dataset")->required();

  // extract
  std::string ex_data, ex_catalog, ex_categories, ex_out;
  auto* extract = app.add_subcommand("extract", "Extract the feature matrix from telemetry");
  extract->add_option("--data", ex_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  extract->add_option("--catalog", ex_catalog, "Feature catalog TSV")->check(CLI::ExistingFile);
  extract->add_option("--categories", ex_categories, "Tracker category list TSV")
      ->check(CLI::ExistingFile);
  extract->add_option("--out", ex_out, "Output matrix JSON")->required();

  // select
  std::string sel_matrix, sel_grid, sel_out;
  uint64_t sel_split_seed = 7;
  auto* select = app.add_subcommand("select", "Rank features and choose K");
  select->add_option("--matrix", sel_matrix)->required()->check(CLI::ExistingFile);
  select->add_option("--grid", sel_grid, "start:stop:step or a comma list (default 5:187:5)");
  select->add_option("--split-seed", sel_split_seed);
  select->add_option("--out", sel_out)->required();

  // train
  std::string tr_matrix, tr_selection, tr_model = "rf", tr_mode = "async", tr_out;
  uint64_t tr_seed = 1, tr_split_seed = 7;
  int tr_hidden = 0;
  auto* train = app.add_subcommand("train", "Train a classifier");
  train->add_option("--matrix", tr_matrix)->required()->check(CLI::ExistingFile);
  train->add_option("--selection", tr_selection, "Selection JSON (default: top-35 features)")
      ->check(CLI::ExistingFile);
  train->add_option("--model", tr_model)->check(CLI::IsMember({"rf", "lr", "gnb", "mlp"}));
  train->add_option("--mode", tr_mode)->check(CLI::IsMember({"async", "realtime"}));
  train->add_option("--seed", tr_seed);
  train->add_option("--split-seed", tr_split_seed);
  train->add_option("--hidden", tr_hidden, "MLP hidden units (default 20)");
  train->add_option("--out", tr_out)->required();

  // eval
  std::string ev_model, ev_matrix, ev_report;
  std::optional<uint64_t> ev_split_seed;
  auto* eval = app.add_subcommand("eval", "Score a model on its held-out test rows");
  eval->add_option("--model", ev_model)->required()->check(CLI::ExistingFile);
  eval->add_option("--matrix", ev_matrix)->required()->check(CLI::ExistingFile);
  eval->add_option("--split-seed", ev_split_seed, "Must match the model's split seed");
  eval->add_option("--report", ev_report, "Write the report JSON here");

  // build-list
  std::string bl_model, bl_data, bl_catalog, bl_categories, bl_out;
  double bl_fake = 0.5, bl_real = 0.9;
  uint64_t bl_checkpoint = 0;
  int64_t bl_updated_at = 0;
  bool bl_gzip = false;
  auto* build = app.add_subcommand("build-list", "Classify sites and write a filterlist");
  build->add_option("--model", bl_model)->required()->check(CLI::ExistingFile);
  build->add_option("--data", bl_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  build->add_option("--catalog", bl_catalog)->check(CLI::ExistingFile);
  build->add_option("--categories", bl_categories)->check(CLI::ExistingFile);
  build->add_option("--fake-threshold", bl_fake);
  build->add_option("--real-threshold", bl_real);
  build->add_option("--checkpoint", bl_checkpoint)->required();
  build->add_option("--updated-at", bl_updated_at, "Entry timestamp, UTC seconds");
  build->add_flag("--gzip", bl_gzip);
  build->add_option("--out", bl_out)->required();

  // delta
  std::string dl_old, dl_new, dl_out;
  bool dl_gzip = false;
  auto* delta = app.add_subcommand("delta", "Compute the delta between two filterlists");
  delta->add_option("--old", dl_old)->required()->check(CLI::ExistingFile);
  delta->add_option("--new", dl_new)->required()->check(CLI::ExistingFile);
  delta->add_flag("--gzip", dl_gzip);
  delta->add_option("--out", dl_out)->required();

  // serve
  std::string sv_config;
  auto* serve = app.add_subcommand("serve", "Run the filterlist push service");
  serve->add_option("--config", sv_config)->required()->check(CLI::ExistingFile);

  // bench-lookup
  std::string bench_list;
  size_t bench_queries = 10000;
  uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench-lookup", "Measure lookup comparisons");
  bench->add_option("--list", bench_list)->required()->check(CLI::ExistingFile);
  bench->add_option("--queries", bench_queries);
  bench->add_option("--seed", bench_seed);

  // retrain
  std::string rt_data, rt_labels, rt_selection, rt_model = "rf", rt_mode = "async",
                                                   rt_data_out, rt_matrix_out, rt_out;
  uint64_t rt_seed = 1, rt_split_seed = 7;
  auto* retrain = app.add_subcommand(
      "retrain", "Merge quorum-confirmed labels into a dataset and train a new model");
  retrain->add_option("--data", rt_data)->required()->check(CLI::ExistingFile);
  retrain->add_option("--labels", rt_labels, "Confirmed labels JSONL")->required()
      ->check(CLI::ExistingFile);
  retrain->add_option("--selection", rt_selection)->check(CLI::ExistingFile);
  retrain->add_option("--model", rt_model)->check(CLI::IsMember({"rf", "lr", "gnb", "mlp"}));
  retrain->add_option("--mode", rt_mode)->check(CLI::IsMember({"async", "realtime"}));
  retrain->add_option("--seed", rt_seed);
  retrain->add_option("--split-seed", rt_split_seed);
  retrain->add_option("--data-out", rt_data_out, "Merged dataset JSONL")->required();
  retrain->add_option("--matrix-out", rt_matrix_out, "Matrix of the merged dataset");
  retrain->add_option("--out", rt_out, "Model JSON")->required();

  // mlp-sweep
  std::string ms_matrix, ms_selection, ms_mode = "async", ms_grid = "8,16,32,64,128", ms_report;
  uint64_t ms_seed = 1, ms_split_seed = 7;
  auto* mlp_sweep = app.add_subcommand("mlp-sweep", "Train the MLP over a grid of hidden widths");
  mlp_sweep->add_option("--matrix", ms_matrix)->required()->check(CLI::ExistingFile);
  mlp_sweep->add_option("--selection", ms_selection)->check(CLI::ExistingFile);
  mlp_sweep->add_option("--mode", ms_mode)->check(CLI::IsMember({"async", "realtime"}));
  mlp_sweep->add_option("--hidden-grid", ms_grid, "Comma-separated hidden widths");
  mlp_sweep->add_option("--seed", ms_seed);
  mlp_sweep->add_option("--split-seed", ms_split_seed);
  mlp_sweep->add_option("--report", ms_report);

  // token
  std::string tk_secret, tk_sub, tk_role = std::string(kSuperUserRole);
  int64_t tk_ttl = 3600;
  auto* token = app.add_subcommand("token", "Mint an HS256 token for label reporters");
  token->add_option("--secret", tk_secret)->required();
  token->add_option("--sub", tk_sub)->required();
  token->add_option("--role", tk_role);
  token->add_option("--ttl", tk_ttl, "Lifetime in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return ReportError("usage", e.what(), 2);
  }

  Manifest m;
  try {
    if (*synth) {
      m.command = "synth";
      SynthConfig config;
      if (!synth_config.empty()) {
        config = SynthConfig::FromJson(ReadJsonFile(synth_config));
        m.Input("synth_config", synth_config);
      }
      if (synth_seed)
        config.seed = *synth_seed;
      m.seed = config.seed;
      std::vector<WebsiteRecord> records = GenerateSynthetic(config);
      SaveDataset(synth_out, records);
      m.Output("dataset", synth_out);
      m.result = {{"records", records.size()}, {"n_real", config.n_real}, {"n_fake", config.n_fake}};
    } else if (*extract) {
      m.command = "extract";
      FeatureCatalog catalog = LoadCatalogOrDefault(ex_catalog);
      CategoryList categories = LoadCategoriesOrDefault(ex_categories);
      m.Input("dataset", ex_data);
      m.Input("catalog", CatalogPath(ex_catalog));
      m.Input("categories", CategoriesPath(ex_categories));
      std::vector<WebsiteRecord> records = LoadDataset(ex_data);
      FeatureMatrix matrix = ExtractMatrix(records, catalog, categories);
      SaveMatrix(ex_out, matrix);
      m.Output("matrix", ex_out);
      m.result = {{"rows", matrix.rows.size()}, {"features", catalog.size()},
                  {"catalog_hash", catalog.Hash()}, {"matrix_hash", matrix.Hash()}};
    } else if (*select) {
      m.command = "select";
      m.seed = sel_split_seed;
      FeatureMatrix matrix = LoadMatrix(sel_matrix);
      m.Input("matrix", sel_matrix);
      std::vector<size_t> grid = sel_grid.empty() ? DefaultGrid(matrix.catalog.size())
                                                  : ParseGrid(sel_grid, matrix.catalog.size());
      SelectionResult result = SelectFeatures(matrix, sel_split_seed, grid);
      WriteFile(sel_out, result.ToJson().dump());
      m.Output("selection", sel_out);
      m.result = {{"chosen_k", result.chosen_k}, {"selected", result.selected}};
    } else if (*train || *retrain) {
      const bool is_retrain = static_cast<bool>(*retrain);
      m.command = is_retrain ? "retrain" : "train";
      TrainOptions options;
      options.kind = ParseModelKind(is_retrain ? rt_model : tr_model);
      options.mode = ParseFeatureMode(is_retrain ? rt_mode : tr_mode);
      options.seed = is_retrain ? rt_seed : tr_seed;
      options.split_seed = is_retrain ? rt_split_seed : tr_split_seed;
      if (tr_hidden > 0)
        options.mlp.hidden_units = tr_hidden;
      m.seed = options.seed;
      const std::string& selection_path = is_retrain ? rt_selection : tr_selection;
      if (!selection_path.empty()) {
        options.features = SelectionResult::Load(selection_path).selected;
        m.Input("selection", selection_path);
      }

      FeatureMatrix matrix;
      if (is_retrain) {
        m.Input("dataset", rt_data);
        m.Input("labels", rt_labels);
        std::map<std::string, SiteLabel> confirmed;
        std::istringstream lines(ReadFile(rt_labels));
        std::string line;
        size_t line_no = 0;
        while (std::getline(lines, line)) {
          ++line_no;
          if (line.empty())
            continue;
          json j = json::parse(line, nullptr, false);
          auto label = j.is_object() && j.contains("label") && j["label"].is_string()
                           ? ParseLabel(j["label"].get<std::string>())
                           : std::nullopt;
          if (!label || !j.contains("domain") || !j["domain"].is_string())
            throw DataError(rt_labels + ": line " + std::to_string(line_no) +
                            ": expected {\"domain\", \"label\"}");
          confirmed[NormalizeDomain(j["domain"].get<std::string>())] = *label;
        }
        std::vector<WebsiteRecord> records = LoadDataset(rt_data);
        size_t applied = 0, changed = 0;
        for (WebsiteRecord& r : records) {
          auto it = confirmed.find(r.domain);
          if (it == confirmed.end())
            continue;
          ++applied;
          if (r.label != it->second)
            ++changed;
          r.label = it->second;
        }
        SaveDataset(rt_data_out, records);
        m.Output("merged_dataset", rt_data_out);
        m.result["labels_applied"] = applied;
        m.result["labels_changed"] = changed;
        m.result["labels_unmatched"] = confirmed.size() - applied;
        std::vector<WebsiteRecord> labeled;
        for (WebsiteRecord& r : records) {
          if (r.label)
            labeled.push_back(std::move(r));
        }
        matrix = ExtractMatrix(labeled, FeatureCatalog::Load(kDataDir / "feature_catalog.tsv"),
                               CategoryList::Load(kDataDir / "category_list.tsv"));
        if (!rt_matrix_out.empty()) {
          SaveMatrix(rt_matrix_out, matrix);
          m.Output("matrix", rt_matrix_out);
        }
      } else {
        matrix = LoadMatrix(tr_matrix);
        m.Input("matrix", tr_matrix);
      }
      TrainedModel model = TrainedModel::Train(matrix, options);
      const std::string& out = is_retrain ? rt_out : tr_out;
      model.Save(out);
      m.Output("model", out);
      m.result["kind"] = ModelKindName(model.kind());
      m.result["mode"] = FeatureModeName(model.options().mode);
      m.result["features"] = model.features().size();
      m.result["validation"] = model.validation_metrics().ToJson();
    } else if (*eval) {
      m.command = "eval";
      TrainedModel model = TrainedModel::Load(ev_model);
      FeatureMatrix matrix = LoadMatrix(ev_matrix);
      m.Input("model", ev_model);
      m.Input("matrix", ev_matrix);
      m.seed = model.options().split_seed;
      if (ev_split_seed && *ev_split_seed != model.options().split_seed)
        throw UsageError("split seed " + std::to_string(*ev_split_seed) +
                         " differs from the model's " +
                         std::to_string(model.options().split_seed));
      if (matrix.catalog.Hash() != model.catalog_hash())
        throw InvariantError("matrix catalog differs from the model's training catalog");
      Metrics metrics = model.EvaluateTest(matrix);
      json report = metrics.ToJson();
      report["model"] = ModelKindName(model.kind());
      report["mode"] = FeatureModeName(model.options().mode);
      report["features"] = model.features().size();
      report["split_seed"] = model.options().split_seed;
      if (!ev_report.empty()) {
        WriteFile(ev_report, report.dump());
        m.Output("report", ev_report);
      }
      m.result = report;
    } else if (*build) {
      m.command = "build-list";
      TrainedModel model = TrainedModel::Load(bl_model);
      m.Input("model", bl_model);
      m.Input("dataset", bl_data);
      m.Input("catalog", CatalogPath(bl_catalog));
      FeatureCatalog catalog = LoadCatalogOrDefault(bl_catalog);
      if (catalog.Hash() != model.catalog_hash())
        throw InvariantError("catalog differs from the model's training catalog");
      std::vector<WebsiteRecord> records = LoadDataset(bl_data);
      FeatureMatrix matrix = ExtractMatrix(records, catalog, LoadCategoriesOrDefault(bl_categories));
      std::vector<double> p = model.PredictProba(matrix);
      std::vector<Prediction> predictions;
      for (size_t i = 0; i < records.size(); ++i)
        predictions.push_back({records[i].domain, p[i]});
      Filterlist list = BuildList(predictions, bl_checkpoint, bl_updated_at, {bl_fake, bl_real});
      WriteMaybeGzip(bl_out, SerializeList(list), bl_gzip);
      m.Output("filterlist", bl_out);
      size_t black = std::count_if(list.entries.begin(), list.entries.end(), [](const auto& e) {
        return e.verdict == Verdict::kBlacklisted;
      });
      m.result = {{"checkpoint", list.checkpoint},
                  {"entries", list.entries.size()},
                  {"blacklisted", black},
                  {"whitelisted", list.entries.size() - black},
                  {"unlisted", records.size() - list.entries.size()}};
    } else if (*delta) {
      m.command = "delta";
      Filterlist old_list = ParseList(ReadMaybeGzip(dl_old));
      Filterlist new_list = ParseList(ReadMaybeGzip(dl_new));
      m.Input("old", dl_old);
      m.Input("new", dl_new);
      Delta d = MakeDelta(old_list, new_list);
      WriteMaybeGzip(dl_out, SerializeDelta(d), dl_gzip);
      m.Output("delta", dl_out);
      m.result = {{"from", d.from}, {"to", d.to}, {"upserts", d.upserts.size()},
                  {"removals", d.removals.size()}};
    } else if (*serve) {
      m.command = "serve";
      ServiceConfig config = ServiceConfig::Load(sv_config);
      m.Input("service_config", sv_config);
      FilterlistService service(config);
      int port = service.Start();
      m.result = {{"bind", config.bind}, {"port", port}};
      auto snap = service.history().Current();
      m.result["checkpoint"] = snap ? json(snap->list.checkpoint) : json(nullptr);
      m.Print();
      std::signal(SIGINT, HandleSignal);
      std::signal(SIGTERM, HandleSignal);
      while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      service.Stop();
      return 0;
    } else if (*bench) {
      m.command = "bench-lookup";
      m.seed = bench_seed;
      Filterlist list = ParseList(ReadMaybeGzip(bench_list));
      m.Input("filterlist", bench_list);
      std::mt19937_64 rng(bench_seed);
      size_t total = 0, worst = 0, hits = 0;
      auto started = std::chrono::steady_clock::now();
      for (size_t q = 0; q < bench_queries; ++q) {
        std::string domain;
        if (!list.entries.empty() && q % 2 == 0) {
          domain = list.entries[std::uniform_int_distribution<size_t>(
                                    0, list.entries.size() - 1)(rng)]
                       .domain;
        } else {
          domain = "absent-" + std::to_string(rng()) + ".test";
        }
        size_t comparisons = 0;
        if (Lookup(list, domain, &comparisons))
          ++hits;
        total += comparisons;
        worst = std::max(worst, comparisons);
      }
      double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      size_t n = list.entries.size();
      size_t bound = n == 0 ? 0 : static_cast<size_t>(std::ceil(std::log2(double(n)))) + 1;
      m.result = {{"entries", n},
                  {"queries", bench_queries},
                  {"hits", hits},
                  {"mean_comparisons", bench_queries ? double(total) / double(bench_queries) : 0.0},
                  {"max_comparisons", worst},
                  {"bound", bound},
                  {"within_bound", worst <= bound},
                  {"mean_lookup_us", bench_queries ? elapsed * 1e6 / double(bench_queries) : 0.0}};
      if (worst > bound) {
        m.Print();
        throw InvariantError("lookup exceeded the comparison bound");
      }
    } else if (*mlp_sweep) {
      m.command = "mlp-sweep";
      m.seed = ms_seed;
      FeatureMatrix matrix = LoadMatrix(ms_matrix);
      m.Input("matrix", ms_matrix);
      TrainOptions options;
      options.kind = ModelKind::kMlp;
      options.mode = ParseFeatureMode(ms_mode);
      options.seed = ms_seed;
      options.split_seed = ms_split_seed;
      if (!ms_selection.empty()) {
        options.features = SelectionResult::Load(ms_selection).selected;
        m.Input("selection", ms_selection);
      }
      json rows = json::array();
      for (size_t width : ParseGrid(ms_grid, 4096)) {
        options.mlp.hidden_units = static_cast<int>(width);
        TrainedModel model = TrainedModel::Train(matrix, options);
        const Mlp::TrainingReport& r = *model.mlp_report();
        Metrics test = model.EvaluateTest(matrix);
        rows.push_back({{"hidden_units", width},
                        {"mean_validation_accuracy", r.mean_accuracy},
                        {"mean_validation_loss", r.mean_loss},
                        {"best_round", r.best_round},
                        {"test_accuracy", test.accuracy},
                        {"test_auc", test.auc}});
      }
      json report = {{"mode", ms_mode},
                     {"features", options.features.empty()
                                      ? json(nullptr)
                                      : json(options.features)},
                     {"rows", rows}};
      if (!ms_report.empty()) {
        WriteFile(ms_report, report.dump());
        m.Output("report", ms_report);
      }
      m.result = report;
    } else if (*token) {
      m.command = "token";
      int64_t now = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
      JwtClaims claims{tk_sub, tk_role, now + tk_ttl};
      m.result = {{"token", SignJwt(claims, tk_secret)}, {"sub", tk_sub}, {"role", tk_role},
                  {"exp", claims.exp}};
    }
    m.Print();
    return 0;
  } catch (const Error& e) {
    return ReportError(ErrorKindName(e.kind()), e.what(), ExitCodeFor(e.kind()));
  } catch (const json::exception& e) {
    return ReportError("data", e.what(), 3);
  } catch (const fs::filesystem_error& e) {
    return ReportError("data", e.what(), 3);
  } catch (const std::exception& e) {
    return ReportError("invariant", e.what(), 4);
  }
}
