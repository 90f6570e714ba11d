#include "sitelens/mlp.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sitelens/error.h"
#include "sitelens/logistic_regression.h"

namespace sitelens {
namespace {

constexpr int kClasses = 2;
constexpr double kProbabilityFloor = 1e-12;

}  // namespace

struct Mlp::Adam {
  std::vector<double> m, v;
  int64_t t = 0;
};

nlohmann::json MlpParams::ToJson() const {
  return {{"hidden_units", hidden_units},
          {"dropout_rate", dropout_rate},
          {"epochs", epochs},
          {"rounds", rounds},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_epsilon", adam_epsilon},
          {"batch_norm_momentum", batch_norm_momentum},
          {"batch_norm_epsilon", batch_norm_epsilon}};
}

MlpParams MlpParams::FromJson(const nlohmann::json& json) {
  MlpParams p;
  p.hidden_units = json.value("hidden_units", p.hidden_units);
  p.dropout_rate = json.value("dropout_rate", p.dropout_rate);
  p.epochs = json.value("epochs", p.epochs);
  p.rounds = json.value("rounds", p.rounds);
  p.batch_size = json.value("batch_size", p.batch_size);
  p.learning_rate = json.value("learning_rate", p.learning_rate);
  p.beta1 = json.value("beta1", p.beta1);
  p.beta2 = json.value("beta2", p.beta2);
  p.adam_epsilon = json.value("adam_epsilon", p.adam_epsilon);
  p.batch_norm_momentum = json.value("batch_norm_momentum", p.batch_norm_momentum);
  p.batch_norm_epsilon = json.value("batch_norm_epsilon", p.batch_norm_epsilon);
  return p;
}

nlohmann::json Mlp::TrainingReport::ToJson() const {
  return {{"round_accuracy", round_accuracy},
          {"round_loss", round_loss},
          {"best_round", best_round},
          {"mean_accuracy", mean_accuracy},
          {"mean_loss", mean_loss}};
}

std::vector<double*> Mlp::Parameters::Flat() {
  std::vector<double*> out;
  out.reserve(Count());
  for (auto* block : {&gamma, &beta, &w1, &b1, &w2, &b2}) {
    for (double& v : *block)
      out.push_back(&v);
  }
  return out;
}

Mlp::Mlp(size_t inputs, const MlpParams& params, uint64_t seed)
    : inputs_(inputs), hidden_(static_cast<size_t>(params.hidden_units)), config_(params) {
  if (inputs_ == 0 || hidden_ == 0)
    throw UsageError("mlp needs at least one input and one hidden unit");
  if (params.dropout_rate < 0.0 || params.dropout_rate >= 1.0)
    throw UsageError("mlp dropout rate must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](size_t fan_in, size_t fan_out, std::vector<double>& w) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    w.resize(fan_in * fan_out);
    for (double& v : w)
      v = dist(rng);
  };
  params_.gamma.assign(inputs_, 1.0);
  params_.beta.assign(inputs_, 0.0);
  glorot(inputs_, hidden_, params_.w1);
  params_.b1.assign(hidden_, 0.0);
  glorot(hidden_, kClasses, params_.w2);
  params_.b2.assign(kClasses, 0.0);
  running_mean_.assign(inputs_, 0.0);
  running_var_.assign(inputs_, 1.0);
}

double Mlp::ForwardBackward(const DenseMatrix& x, std::span<const int> y,
                            const std::vector<double>* dropout_mask, Parameters* gradient,
                            std::vector<double>* batch_mean,
                            std::vector<double>* batch_var) const {
  const size_t n = x.rows, d = inputs_, h = hidden_;
  const double inv_n = 1.0 / static_cast<double>(n);
  const Parameters& p = params_;

  std::vector<double> mean(d, 0.0), var(d, 0.0), inv_std(d);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j)
      mean[j] += x.at(i, j);
  }
  for (double& m : mean)
    m *= inv_n;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) {
      double c = x.at(i, j) - mean[j];
      var[j] += c * c;
    }
  }
  for (size_t j = 0; j < d; ++j) {
    var[j] *= inv_n;
    inv_std[j] = 1.0 / std::sqrt(var[j] + config_.batch_norm_epsilon);
  }

  std::vector<double> xhat(n * d), normed(n * d), pre(n * h), act(n * h), probs(n * kClasses);
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (x.at(i, j) - mean[j]) * inv_std[j];
      normed[i * d + j] = p.gamma[j] * xhat[i * d + j] + p.beta[j];
    }
    for (size_t k = 0; k < h; ++k) {
      double z = p.b1[k];
      for (size_t j = 0; j < d; ++j)
        z += normed[i * d + j] * p.w1[j * h + k];
      pre[i * h + k] = z;
      double a = z > 0.0 ? z : 0.0;
      if (dropout_mask)
        a *= (*dropout_mask)[i * h + k];
      act[i * h + k] = a;
    }
    double logits[kClasses];
    for (int c = 0; c < kClasses; ++c) {
      double z = p.b2[c];
      for (size_t k = 0; k < h; ++k)
        z += act[i * h + k] * p.w2[k * kClasses + c];
      logits[c] = z;
    }
    double top = std::max(logits[0], logits[1]);
    double norm = std::exp(logits[0] - top) + std::exp(logits[1] - top);
    for (int c = 0; c < kClasses; ++c)
      probs[i * kClasses + c] = std::exp(logits[c] - top) / norm;
    loss -= (logits[y[i]] - top - std::log(norm));
  }
  loss *= inv_n;
  if (batch_mean)
    *batch_mean = mean;
  if (batch_var)
    *batch_var = var;
  if (!gradient)
    return loss;

  Parameters& g = *gradient;
  g.gamma.assign(d, 0.0);
  g.beta.assign(d, 0.0);
  g.w1.assign(d * h, 0.0);
  g.b1.assign(h, 0.0);
  g.w2.assign(h * kClasses, 0.0);
  g.b2.assign(kClasses, 0.0);
  std::vector<double> d_pre(h), d_normed(d);
  for (size_t i = 0; i < n; ++i) {
    double d_logits[kClasses];
    for (int c = 0; c < kClasses; ++c)
      d_logits[c] = (probs[i * kClasses + c] - (y[i] == c ? 1.0 : 0.0)) * inv_n;
    for (int c = 0; c < kClasses; ++c)
      g.b2[c] += d_logits[c];
    for (size_t k = 0; k < h; ++k) {
      double d_act = 0.0;
      for (int c = 0; c < kClasses; ++c) {
        g.w2[k * kClasses + c] += act[i * h + k] * d_logits[c];
        d_act += d_logits[c] * p.w2[k * kClasses + c];
      }
      if (dropout_mask)
        d_act *= (*dropout_mask)[i * h + k];
      d_pre[k] = pre[i * h + k] > 0.0 ? d_act : 0.0;
      g.b1[k] += d_pre[k];
    }
    for (size_t j = 0; j < d; ++j) {
      double v = normed[i * d + j];
      double acc = 0.0;
      for (size_t k = 0; k < h; ++k) {
        g.w1[j * h + k] += v * d_pre[k];
        acc += d_pre[k] * p.w1[j * h + k];
      }
      d_normed[j] = acc;
      g.gamma[j] += acc * xhat[i * d + j];
      g.beta[j] += acc;
    }
  }
  return loss;
}

double Mlp::LossAndGradient(const DenseMatrix& x, std::span<const int> y,
                            std::vector<double>* gradient) const {
  if (x.cols != inputs_ || x.rows != y.size() || x.rows == 0)
    throw UsageError("mlp: batch shape does not match the network");
  if (!gradient)
    return ForwardBackward(x, y, nullptr, nullptr, nullptr, nullptr);
  Parameters g;
  double loss = ForwardBackward(x, y, nullptr, &g, nullptr, nullptr);
  gradient->clear();
  for (double* v : g.Flat())
    gradient->push_back(*v);
  return loss;
}

double Mlp::FiniteDifferenceCheck(const DenseMatrix& x, std::span<const int> y,
                                  double epsilon) const {
  std::vector<double> analytic;
  LossAndGradient(x, y, &analytic);
  Mlp probe = *this;
  std::vector<double*> flat = probe.params_.Flat();
  double worst = 0.0;
  for (size_t i = 0; i < flat.size(); ++i) {
    double original = *flat[i];
    *flat[i] = original + epsilon;
    double up = probe.LossAndGradient(x, y, nullptr);
    *flat[i] = original - epsilon;
    double down = probe.LossAndGradient(x, y, nullptr);
    *flat[i] = original;
    double numeric = (up - down) / (2.0 * epsilon);
    double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-6);
    double err = std::abs(analytic[i] - numeric) / denom;
    if (!std::isfinite(err))
      return err;
    worst = std::max(worst, err);
  }
  return worst;
}

void Mlp::Step(const DenseMatrix& x, std::span<const int> y, std::mt19937_64& rng, Adam& adam) {
  std::vector<double> mask(x.rows * hidden_, 1.0);
  if (config_.dropout_rate > 0.0) {
    std::bernoulli_distribution keep(1.0 - config_.dropout_rate);
    double scale = 1.0 / (1.0 - config_.dropout_rate);
    for (double& m : mask)
      m = keep(rng) ? scale : 0.0;
  }
  Parameters g;
  std::vector<double> mean, var;
  ForwardBackward(x, y, &mask, &g, &mean, &var);

  const double momentum = config_.batch_norm_momentum;
  for (size_t j = 0; j < inputs_; ++j) {
    running_mean_[j] = momentum * running_mean_[j] + (1.0 - momentum) * mean[j];
    running_var_[j] = momentum * running_var_[j] + (1.0 - momentum) * var[j];
  }

  std::vector<double*> values = params_.Flat();
  std::vector<double*> grads = g.Flat();
  if (adam.m.empty()) {
    adam.m.assign(values.size(), 0.0);
    adam.v.assign(values.size(), 0.0);
  }
  ++adam.t;
  const double correction1 = 1.0 - std::pow(config_.beta1, double(adam.t));
  const double correction2 = 1.0 - std::pow(config_.beta2, double(adam.t));
  for (size_t i = 0; i < values.size(); ++i) {
    double grad = *grads[i];
    adam.m[i] = config_.beta1 * adam.m[i] + (1.0 - config_.beta1) * grad;
    adam.v[i] = config_.beta2 * adam.v[i] + (1.0 - config_.beta2) * grad * grad;
    double m_hat = adam.m[i] / correction1;
    double v_hat = adam.v[i] / correction2;
    *values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.adam_epsilon);
  }
}

Mlp Mlp::Train(const DenseMatrix& x, std::span<const int> y, const MlpParams& params,
               uint64_t seed, const DenseMatrix* validation_x,
               std::span<const int> validation_y, TrainingReport* report) {
  if (x.rows != y.size() || x.rows == 0)
    throw UsageError("mlp: rows and labels must match and be non-empty");
  if (params.rounds < 1 || params.epochs < 1 || params.batch_size < 1)
    throw UsageError("mlp: rounds, epochs and batch size must be positive");
  RequireFinite(x);
  const DenseMatrix& eval_x = validation_x && validation_x->rows > 0 ? *validation_x : x;
  std::span<const int> eval_y = validation_x && validation_x->rows > 0 ? validation_y : y;
  if (eval_x.rows != eval_y.size())
    throw UsageError("mlp: validation rows and labels differ in count");

  TrainingReport local;
  Mlp best;
  double best_accuracy = -1.0, best_loss = 0.0;
  for (int round = 0; round < params.rounds; ++round) {
    uint64_t round_seed = seed + static_cast<uint64_t>(round);
    Mlp model(x.cols, params, round_seed);
    std::mt19937_64 rng(round_seed ^ 0x2545f4914f6cdd1dULL);
    Adam adam;
    std::vector<size_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (size_t start = 0; start < order.size(); start += size_t(params.batch_size)) {
        size_t end = std::min(order.size(), start + size_t(params.batch_size));
        std::vector<size_t> rows(order.begin() + start, order.begin() + end);
        std::vector<int> labels;
        for (size_t r : rows)
          labels.push_back(y[r]);
        model.Step(x.SelectRows(rows), labels, rng, adam);
      }
    }

    std::vector<double> p = model.PredictProba(eval_x);
    double accuracy = Accuracy(p, eval_y);
    double loss = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
      double q = eval_y[i] == 1 ? p[i] : 1.0 - p[i];
      loss -= std::log(std::max(q, kProbabilityFloor));
    }
    loss /= static_cast<double>(p.size());
    local.round_accuracy.push_back(accuracy);
    local.round_loss.push_back(loss);
    if (accuracy > best_accuracy || (accuracy == best_accuracy && loss < best_loss)) {
      best_accuracy = accuracy;
      best_loss = loss;
      best = std::move(model);
      local.best_round = round;
    }
  }
  local.mean_accuracy =
      std::accumulate(local.round_accuracy.begin(), local.round_accuracy.end(), 0.0) /
      params.rounds;
  local.mean_loss =
      std::accumulate(local.round_loss.begin(), local.round_loss.end(), 0.0) / params.rounds;
  if (report)
    *report = std::move(local);
  return best;
}

std::vector<double> Mlp::PredictProba(const DenseMatrix& x) const {
  if (x.cols != inputs_)
    throw UsageError("mlp: expected " + std::to_string(inputs_) + " features, got " +
                     std::to_string(x.cols));
  const size_t d = inputs_, h = hidden_;
  std::vector<double> out(x.rows), normed(d), act(h);
  for (size_t i = 0; i < x.rows; ++i) {
    for (size_t j = 0; j < d; ++j) {
      double xhat = (x.at(i, j) - running_mean_[j]) /
                    std::sqrt(running_var_[j] + config_.batch_norm_epsilon);
      normed[j] = params_.gamma[j] * xhat + params_.beta[j];
    }
    for (size_t k = 0; k < h; ++k) {
      double z = params_.b1[k];
      for (size_t j = 0; j < d; ++j)
        z += normed[j] * params_.w1[j * h + k];
      act[k] = z > 0.0 ? z : 0.0;
    }
    double logits[kClasses];
    for (int c = 0; c < kClasses; ++c) {
      double z = params_.b2[c];
      for (size_t k = 0; k < h; ++k)
        z += act[k] * params_.w2[k * kClasses + c];
      logits[c] = z;
    }
    // softmax(logits)[1] == sigmoid(l1 - l0)
    double diff = logits[1] - logits[0];
    out[i] = diff >= 0.0 ? 1.0 / (1.0 + std::exp(-diff)) : std::exp(diff) / (1.0 + std::exp(diff));
  }
  return out;
}

nlohmann::json Mlp::ToJson() const {
  return {{"inputs", inputs_},
          {"hidden_units", hidden_},
          {"config", config_.ToJson()},
          {"gamma", params_.gamma},
          {"beta", params_.beta},
          {"w1", params_.w1},
          {"b1", params_.b1},
          {"w2", params_.w2},
          {"b2", params_.b2},
          {"running_mean", running_mean_},
          {"running_var", running_var_}};
}

Mlp Mlp::FromJson(const nlohmann::json& json) {
  Mlp m;
  m.inputs_ = json.at("inputs").get<size_t>();
  m.hidden_ = json.at("hidden_units").get<size_t>();
  m.config_ = MlpParams::FromJson(json.at("config"));
  m.params_.gamma = json.at("gamma").get<std::vector<double>>();
  m.params_.beta = json.at("beta").get<std::vector<double>>();
  m.params_.w1 = json.at("w1").get<std::vector<double>>();
  m.params_.b1 = json.at("b1").get<std::vector<double>>();
  m.params_.w2 = json.at("w2").get<std::vector<double>>();
  m.params_.b2 = json.at("b2").get<std::vector<double>>();
  m.running_mean_ = json.at("running_mean").get<std::vector<double>>();
  m.running_var_ = json.at("running_var").get<std::vector<double>>();
  const size_t d = m.inputs_, h = m.hidden_;
  bool shapes_ok = m.params_.gamma.size() == d && m.params_.beta.size() == d &&
                   m.params_.w1.size() == d * h && m.params_.b1.size() == h &&
                   m.params_.w2.size() == h * kClasses && m.params_.b2.size() == kClasses &&
                   m.running_mean_.size() == d && m.running_var_.size() == d;
  if (!shapes_ok)
    throw InvariantError("mlp document has inconsistent parameter shapes");
  return m;
}

}  // namespace sitelens
