#include "sitelens/model.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sitelens/error.h"

namespace sitelens {
namespace {

constexpr std::string_view kFormatTag = "sitelens-model";

Metrics MetricsFromJson(const nlohmann::json& json) {
  Metrics m;
  m.tp_rate = json.at("tp_rate").get<double>();
  m.fp_rate = json.at("fp_rate").get<double>();
  m.precision = json.at("precision").get<double>();
  m.recall = json.at("recall").get<double>();
  m.f1 = json.at("f1").get<double>();
  m.auc = json.at("auc").get<double>();
  m.accuracy = json.at("accuracy").get<double>();
  return m;
}

Mlp::TrainingReport ReportFromJson(const nlohmann::json& json) {
  Mlp::TrainingReport r;
  r.round_accuracy = json.at("round_accuracy").get<std::vector<double>>();
  r.round_loss = json.at("round_loss").get<std::vector<double>>();
  r.best_round = json.at("best_round").get<int>();
  r.mean_accuracy = json.at("mean_accuracy").get<double>();
  r.mean_loss = json.at("mean_loss").get<double>();
  return r;
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRandomForest: return "rf";
    case ModelKind::kLogisticRegression: return "lr";
    case ModelKind::kNaiveBayes: return "gnb";
    case ModelKind::kMlp: return "mlp";
  }
  return "?";
}

ModelKind ParseModelKind(std::string_view name) {
  for (ModelKind k : {ModelKind::kRandomForest, ModelKind::kLogisticRegression,
                      ModelKind::kNaiveBayes, ModelKind::kMlp}) {
    if (ModelKindName(k) == name)
      return k;
  }
  throw UsageError("unknown model kind: " + std::string(name));
}

std::string_view FeatureModeName(FeatureMode mode) {
  return mode == FeatureMode::kAsync ? "async" : "realtime";
}

FeatureMode ParseFeatureMode(std::string_view name) {
  if (name == "async")
    return FeatureMode::kAsync;
  if (name == "realtime")
    return FeatureMode::kRealtime;
  throw UsageError("unknown feature mode: " + std::string(name));
}

std::vector<int> BinaryLabels(const FeatureMatrix& matrix) {
  std::vector<int> y;
  y.reserve(matrix.rows.size());
  for (const FeatureVector& row : matrix.rows) {
    if (!row.label)
      throw DataError("row for " + row.domain + " has no label");
    y.push_back(*row.label == SiteLabel::kFake ? 1 : 0);
  }
  return y;
}

PreparedSplit PrepareSplit(const FeatureMatrix& matrix, std::span<const std::string> features,
                           uint64_t split_seed) {
  PreparedSplit out;
  std::vector<int> y = BinaryLabels(matrix);
  out.split = SplitDataset(y, split_seed);
  out.columns = ResolveFeatureNames(matrix.catalog, features);

  FeatureMatrix train_rows{matrix.catalog, {}};
  for (size_t i : out.split.train)
    train_rows.rows.push_back(matrix.rows[i]);
  out.preprocessor = FittedPreprocessor::Fit(train_rows);
  DenseMatrix all = out.preprocessor.Transform(matrix).SelectColumns(out.columns);

  auto take = [&](const std::vector<size_t>& idx, DenseMatrix* x, std::vector<int>* labels) {
    *x = all.SelectRows(idx);
    for (size_t i : idx)
      labels->push_back(y[i]);
  };
  take(out.split.train, &out.train, &out.y_train);
  take(out.split.validation, &out.validation, &out.y_validation);
  take(out.split.test, &out.test, &out.y_test);
  return out;
}

nlohmann::json TrainOptions::HyperparametersJson() const {
  switch (kind) {
    case ModelKind::kRandomForest: return rf.ToJson();
    case ModelKind::kLogisticRegression: return lr.ToJson();
    case ModelKind::kNaiveBayes: return {{"variance_floor", kVarianceFloor}};
    case ModelKind::kMlp: return mlp.ToJson();
  }
  return nullptr;
}

TrainedModel TrainedModel::Train(const FeatureMatrix& matrix, const TrainOptions& options) {
  TrainedModel m;
  m.options_ = options;
  std::vector<std::string> names = options.features;
  if (names.empty()) {
    for (std::string_view n : kDefaultTopFeatures)
      names.emplace_back(n);
  }
  if (options.mode == FeatureMode::kRealtime)
    names = RealtimeSubset(matrix.catalog, names);
  if (names.empty())
    throw UsageError("no features left to train on");
  m.features_ = names;
  m.options_.features = names;

  PreparedSplit data = PrepareSplit(matrix, names, options.split_seed);
  m.columns_ = data.columns;
  m.preprocessor_ = data.preprocessor;
  m.matrix_hash_ = matrix.Hash();
  m.catalog_hash_ = matrix.catalog.Hash();

  switch (options.kind) {
    case ModelKind::kRandomForest:
      m.classifier_ = RandomForest::Train(data.train, data.y_train, options.rf, options.seed);
      break;
    case ModelKind::kLogisticRegression:
      m.classifier_ = LogisticRegression::Train(data.train, data.y_train, options.lr);
      break;
    case ModelKind::kNaiveBayes:
      m.classifier_ = GaussianNaiveBayes::Train(data.train, data.y_train);
      break;
    case ModelKind::kMlp: {
      Mlp::TrainingReport report;
      m.classifier_ = Mlp::Train(data.train, data.y_train, options.mlp, options.seed,
                                 &data.validation, data.y_validation, &report);
      m.mlp_report_ = std::move(report);
      break;
    }
  }
  m.validation_ = Evaluate(m.PredictDense(data.validation), data.y_validation);
  return m;
}

std::vector<double> TrainedModel::PredictDense(const DenseMatrix& x) const {
  return std::visit([&x](const auto& c) { return c.PredictProba(x); }, classifier_);
}

std::vector<double> TrainedModel::PredictProba(const FeatureMatrix& matrix) const {
  return PredictDense(preprocessor_.Transform(matrix).SelectColumns(columns_));
}

Metrics TrainedModel::EvaluateTest(const FeatureMatrix& matrix) const {
  PreparedSplit data = PrepareSplit(matrix, features_, options_.split_seed);
  if (data.preprocessor.Hash() != preprocessor_.Hash()) {
    throw InvariantError(
        "matrix does not reproduce the model's preprocessor (hash " +
        data.preprocessor.Hash().substr(0, 12) + " vs " + preprocessor_.Hash().substr(0, 12) +
        ")");
  }
  return Evaluate(PredictDense(data.test), data.y_test);
}

nlohmann::json TrainedModel::ToJson() const {
  nlohmann::json training = {{"validation", validation_.ToJson()}};
  if (mlp_report_)
    training["mlp"] = mlp_report_->ToJson();
  return {
      {"format", kFormatTag},
      {"version", kFormatVersion},
      {"kind", ModelKindName(options_.kind)},
      {"mode", FeatureModeName(options_.mode)},
      {"seed", options_.seed},
      {"split_seed", options_.split_seed},
      {"hyperparameters", options_.HyperparametersJson()},
      {"features", features_},
      {"catalog_hash", catalog_hash_},
      {"matrix_hash", matrix_hash_},
      {"preprocessor", preprocessor_.ToJson()},
      {"preprocessor_hash", preprocessor_.Hash()},
      {"training", training},
      {"model", std::visit([](const auto& c) { return c.ToJson(); }, classifier_)},
  };
}

TrainedModel TrainedModel::FromJson(const nlohmann::json& json) {
  TrainedModel m;
  try {
    if (json.at("format").get<std::string>() != kFormatTag)
      throw DataError("not a model document");
    if (json.at("version").get<int>() != kFormatVersion)
      throw DataError("unsupported model version " + json.at("version").dump());
    TrainOptions& o = m.options_;
    o.kind = ParseModelKind(json.at("kind").get<std::string>());
    o.mode = ParseFeatureMode(json.at("mode").get<std::string>());
    o.seed = json.at("seed").get<uint64_t>();
    o.split_seed = json.at("split_seed").get<uint64_t>();
    const nlohmann::json& hp = json.at("hyperparameters");
    if (o.kind == ModelKind::kRandomForest)
      o.rf = RandomForestParams::FromJson(hp);
    else if (o.kind == ModelKind::kLogisticRegression)
      o.lr = LogisticRegressionParams::FromJson(hp);
    else if (o.kind == ModelKind::kMlp)
      o.mlp = MlpParams::FromJson(hp);
    m.features_ = json.at("features").get<std::vector<std::string>>();
    o.features = m.features_;
    m.catalog_hash_ = json.at("catalog_hash").get<std::string>();
    m.matrix_hash_ = json.at("matrix_hash").get<std::string>();
    m.preprocessor_ = FittedPreprocessor::FromJson(json.at("preprocessor"));
    if (m.preprocessor_.Hash() != json.at("preprocessor_hash").get<std::string>())
      throw InvariantError("embedded preprocessor does not match its recorded hash");
    const nlohmann::json& training = json.at("training");
    m.validation_ = MetricsFromJson(training.at("validation"));
    if (training.contains("mlp"))
      m.mlp_report_ = ReportFromJson(training.at("mlp"));

    const nlohmann::json& body = json.at("model");
    switch (o.kind) {
      case ModelKind::kRandomForest: m.classifier_ = RandomForest::FromJson(body); break;
      case ModelKind::kLogisticRegression:
        m.classifier_ = LogisticRegression::FromJson(body);
        break;
      case ModelKind::kNaiveBayes: m.classifier_ = GaussianNaiveBayes::FromJson(body); break;
      case ModelKind::kMlp: m.classifier_ = Mlp::FromJson(body); break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }

  const auto& names = m.preprocessor_.names();
  for (const std::string& f : m.features_) {
    auto it = std::find(names.begin(), names.end(), f);
    if (it == names.end())
      throw InvariantError("model feature not in its preprocessor: " + f);
    m.columns_.push_back(static_cast<size_t>(it - names.begin()));
  }
  return m;
}

void TrainedModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write " + path.string());
  out << ToJson().dump() << '\n';
  if (!out)
    throw DataError("write failed for " + path.string());
}

TrainedModel TrainedModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot read " + path.string());
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return FromJson(json);
}

}  // namespace sitelens
