#include "ldsplan/mpmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ldsplan/error.hpp"
#include "ldsplan/parallel.hpp"
#include "ldsplan/rng.hpp"

namespace ldsplan::mpmc {

std::string_view to_string(LossKind k) { return k == LossKind::L2 ? "l2" : "hickernell"; }

LossKind parse_loss_kind(std::string_view s) {
  if (s == "l2") return LossKind::L2;
  if (s == "hickernell") return LossKind::Hickernell;
  throw InvalidArgument("unknown loss kind '" + std::string(s) + "' (expected l2|hickernell)");
}

std::size_t KnnGraph::edge_count() const {
  std::size_t e = 0;
  for (const auto& nb : neighbors) e += nb.size();
  return e;
}

KnnGraph build_knn_graph(const PointSet& inputs, std::size_t k, bool symmetrize) {
  const std::size_t n = inputs.size();
  const std::size_t d = inputs.dim();
  if (k == 0 || k >= n) {
    throw InvalidArgument("build_knn_graph: need 1 <= k < n (k=" + std::to_string(k) +
                          ", n=" + std::to_string(n) + ")");
  }
  KnnGraph g;
  g.k = k;
  g.symmetric = symmetrize;
  g.neighbors.resize(n);
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = inputs(i, c) - inputs(j, c);
        s += diff * diff;
      }
      cand.emplace_back(s, j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t t = 0; t < k; ++t) g.neighbors[i].push_back(cand[t].second);
  }
  if (symmetrize) {
    auto picked = g.neighbors;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : picked[i]) g.neighbors[j].push_back(i);
    }
  }
  for (auto& nb : g.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

MpmcModel::MpmcModel(std::size_t dim, std::size_t hidden, std::size_t layers, ClampMode clamp)
    : dim_(dim), hidden_(hidden), layers_(layers), clamp_(clamp) {
  if (dim == 0) throw InvalidArgument("MpmcModel: dim must be >= 1");
  if (layers == 0) throw InvalidArgument("MpmcModel: need at least one message-passing layer");
  if (hidden < dim) throw InvalidArgument("MpmcModel: hidden width must be >= dim");
  enc_w_ = take(dim, hidden);
  enc_b_ = take(1, hidden);
  for (std::size_t l = 0; l < layers; ++l) {
    LayerBlocks lb;
    lb.msg_w = take(2 * hidden + dim, hidden);
    lb.msg_b = take(1, hidden);
    lb.upd_w = take(2 * hidden, hidden);
    lb.upd_b = take(1, hidden);
    layer_blocks_.push_back(lb);
  }
  dec_w_ = take(hidden, dim);
  dec_b_ = take(1, dim);
  params_.assign(cursor_, 0.0);
}

MpmcModel::Block MpmcModel::take(std::size_t rows, std::size_t cols) {
  Block b{cursor_, rows, cols};
  cursor_ += rows * cols;
  return b;
}

MpmcModel MpmcModel::random(std::size_t dim, std::size_t hidden, std::size_t layers,
                            std::uint64_t seed, ClampMode clamp) {
  MpmcModel m(dim, hidden, layers, clamp);
  Xoshiro256 rng(seed);
  auto glorot = [&](Block b) {
    const double limit = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    auto w = m.view(b);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
    }
  };
  glorot(m.enc_w_);
  for (const auto& lb : m.layer_blocks_) {
    glorot(lb.msg_w);
    glorot(lb.upd_w);
  }
  glorot(m.dec_w_);
  return m;
}

namespace {

Eigen::MatrixXd to_matrix(const PointSet& ps) {
  Eigen::MatrixXd x(Eigen::Index(ps.size()), Eigen::Index(ps.dim()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t k = 0; k < ps.dim(); ++k) x(Eigen::Index(i), Eigen::Index(k)) = ps(i, k);
  }
  return x;
}

PointSet to_points(const Eigen::MatrixXd& m, std::string provenance) {
  const auto n = static_cast<std::size_t>(m.rows());
  const auto d = static_cast<std::size_t>(m.cols());
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) coords[i * d + k] = m(Eigen::Index(i), Eigen::Index(k));
  }
  return PointSet(n, d, std::move(coords), std::move(provenance));
}

std::vector<std::size_t> edge_offsets(const KnnGraph& graph) {
  std::vector<std::size_t> off(graph.size() + 1, 0);
  for (std::size_t i = 0; i < graph.size(); ++i) off[i + 1] = off[i] + graph.neighbors[i].size();
  return off;
}

void check_finite(const Eigen::MatrixXd& m, const char* where) {
  if (!m.allFinite()) throw Divergence(std::string("non-finite values in ") + where);
}

Eigen::Map<Eigen::MatrixXd> grad_view(std::span<double> grad, MpmcModel::Block b) {
  return {grad.data() + b.offset, Eigen::Index(b.rows), Eigen::Index(b.cols)};
}

double sigmoid(double y) { return 1.0 / (1.0 + std::exp(-y)); }

}  // namespace

Eigen::MatrixXd forward(const MpmcModel& model, const PointSet& inputs, const KnnGraph& graph,
                        ForwardCache* cache) {
  const auto n = Eigen::Index(inputs.size());
  const auto d = Eigen::Index(inputs.dim());
  const auto h = Eigen::Index(model.hidden());
  if (static_cast<std::size_t>(d) != model.dim()) throw InvalidArgument("forward: input dimension mismatch");
  if (graph.size() != inputs.size()) throw InvalidArgument("forward: graph size mismatch");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  c.inputs = to_matrix(inputs);
  const auto off = edge_offsets(graph);

  Eigen::MatrixXd state =
      ((c.inputs * model.view(model.encoder_w())).rowwise() +
       model.view(model.encoder_b()).row(0))
          .array()
          .tanh()
          .matrix();
  check_finite(state, "encoder");
  c.states.push_back(state);

  for (std::size_t l = 0; l < model.layers(); ++l) {
    const auto& lb = model.layer(l);
    const auto wm = model.view(lb.msg_w);
    const Eigen::MatrixXd a = state * wm.topRows(h);
    const Eigen::MatrixXd b = state * wm.middleRows(h, h);
    const Eigen::MatrixXd pos = c.inputs * wm.bottomRows(d);
    const Eigen::RowVectorXd bm = model.view(lb.msg_b).row(0);

    Eigen::MatrixXd messages(Eigen::Index(off.back()), h);
    Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(n, h);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& nb = graph.neighbors[std::size_t(i)];
      for (std::size_t t = 0; t < nb.size(); ++t) {
        const auto j = Eigen::Index(nb[t]);
        const auto e = Eigen::Index(off[std::size_t(i)] + t);
        messages.row(e) = (a.row(i) + b.row(j) + pos.row(j) - pos.row(i) + bm).array().tanh();
        agg.row(i) += messages.row(e);
      }
      if (!nb.empty()) agg.row(i) /= static_cast<double>(nb.size());
    }

    const auto wu = model.view(lb.upd_w);
    const Eigen::MatrixXd upd =
        ((state * wu.topRows(h) + agg * wu.bottomRows(h)).rowwise() + model.view(lb.upd_b).row(0))
            .array()
            .tanh()
            .matrix();
    state += upd;
    check_finite(state, "message-passing layer");
    c.messages.push_back(std::move(messages));
    c.aggregates.push_back(std::move(agg));
    c.updates.push_back(upd);
    c.states.push_back(state);
  }

  c.logits = (state * model.view(model.decoder_w())).rowwise() + model.view(model.decoder_b()).row(0);
  check_finite(c.logits, "decoder");
  if (model.clamp() == ClampMode::Sigmoid) {
    c.outputs = c.logits.unaryExpr([](double y) { return sigmoid(y); });
  } else {
    c.outputs = c.logits.cwiseMax(0.0).cwiseMin(1.0);
  }
  return c.outputs;
}

PointSet forward_points(const MpmcModel& model, const PointSet& inputs, const KnnGraph& graph) {
  return to_points(forward(model, inputs, graph), "mpmc forward");
}

void backward(const MpmcModel& model, const KnnGraph& graph, const ForwardCache& c,
              const Eigen::MatrixXd& d_outputs, std::span<double> grad) {
  if (grad.size() != model.parameter_count()) throw InvalidArgument("backward: gradient size mismatch");
  const auto n = c.inputs.rows();
  const auto d = c.inputs.cols();
  const auto h = Eigen::Index(model.hidden());
  const auto off = edge_offsets(graph);

  Eigen::MatrixXd d_logits;
  if (model.clamp() == ClampMode::Sigmoid) {
    d_logits = d_outputs.array() * c.outputs.array() * (1.0 - c.outputs.array());
  } else {
    d_logits = d_outputs;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        const double y = c.logits(i, k);
        if (!(y > 0.0 && y < 1.0)) d_logits(i, k) = 0.0;
      }
    }
  }

  const Eigen::MatrixXd& last = c.states.back();
  grad_view(grad, model.decoder_w()) += last.transpose() * d_logits;
  grad_view(grad, model.decoder_b()) += d_logits.colwise().sum();
  Eigen::MatrixXd d_state = d_logits * model.view(model.decoder_w()).transpose();

  for (std::size_t l = model.layers(); l-- > 0;) {
    const auto& lb = model.layer(l);
    const Eigen::MatrixXd& state = c.states[l];
    const Eigen::MatrixXd& agg = c.aggregates[l];
    const Eigen::MatrixXd& msgs = c.messages[l];
    const auto wu = model.view(lb.upd_w);
    const auto wm = model.view(lb.msg_w);

    // H' = H + tanh(U)
    const Eigen::MatrixXd d_u = d_state.array() * (1.0 - c.updates[l].array().square());
    grad_view(grad, lb.upd_w).topRows(h) += state.transpose() * d_u;
    grad_view(grad, lb.upd_w).bottomRows(h) += agg.transpose() * d_u;
    grad_view(grad, lb.upd_b) += d_u.colwise().sum();
    Eigen::MatrixXd d_prev = d_state + d_u * wu.topRows(h).transpose();
    const Eigen::MatrixXd d_agg = d_u * wu.bottomRows(h).transpose();

    // z_ij = A_i + B_j + P_j - P_i + bm, m_ij = tanh(z_ij)
    Eigen::MatrixXd d_a = Eigen::MatrixXd::Zero(n, h);
    Eigen::MatrixXd d_b = Eigen::MatrixXd::Zero(n, h);
    Eigen::MatrixXd d_pos = Eigen::MatrixXd::Zero(n, h);
    Eigen::RowVectorXd d_bm = Eigen::RowVectorXd::Zero(h);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& nb = graph.neighbors[std::size_t(i)];
      if (nb.empty()) continue;
      const double inv_deg = 1.0 / static_cast<double>(nb.size());
      for (std::size_t t = 0; t < nb.size(); ++t) {
        const auto j = Eigen::Index(nb[t]);
        const auto e = Eigen::Index(off[std::size_t(i)] + t);
        const Eigen::RowVectorXd dz =
            (d_agg.row(i) * inv_deg).array() * (1.0 - msgs.row(e).array().square());
        d_a.row(i) += dz;
        d_b.row(j) += dz;
        d_pos.row(j) += dz;
        d_pos.row(i) -= dz;
        d_bm += dz;
      }
    }
    auto gwm = grad_view(grad, lb.msg_w);
    gwm.topRows(h) += state.transpose() * d_a;
    gwm.middleRows(h, h) += state.transpose() * d_b;
    gwm.bottomRows(d) += c.inputs.transpose() * d_pos;
    grad_view(grad, lb.msg_b) += d_bm;
    d_prev += d_a * wm.topRows(h).transpose() + d_b * wm.middleRows(h, h).transpose();
    d_state = std::move(d_prev);
  }

  const Eigen::MatrixXd d_enc = d_state.array() * (1.0 - c.states.front().array().square());
  grad_view(grad, model.encoder_w()) += c.inputs.transpose() * d_enc;
  grad_view(grad, model.encoder_b()) += d_enc.colwise().sum();
}

double loss(const PointSet& ps, LossKind kind) {
  return kind == LossKind::L2 ? l2_warnock(ps).squared : hickernell_l2(ps).squared;
}

double loss(const Eigen::MatrixXd& points, LossKind kind, Eigen::MatrixXd* grad) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  // closed_form_squared expects row-major storage.
  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) x[i * d + k] = points(Eigen::Index(i), Eigen::Index(k));
  }
  const Kernel kernel = kind == LossKind::L2 ? Kernel::Warnock : Kernel::Hickernell;
  if (!grad) return closed_form_squared(x, n, d, kernel);
  std::vector<double> g(n * d);
  const double value = closed_form_squared(x, n, d, kernel, g);
  grad->resize(points.rows(), points.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) (*grad)(Eigen::Index(i), Eigen::Index(k)) = g[i * d + k];
  }
  return value;
}

double loss_and_gradient(const MpmcModel& model, const PointSet& inputs, const KnnGraph& graph,
                         LossKind kind, std::span<double> grad) {
  ForwardCache cache;
  const Eigen::MatrixXd out = forward(model, inputs, graph, &cache);
  Eigen::MatrixXd d_out;
  const double value = loss(out, kind, &d_out);
  if (!std::isfinite(value)) throw Divergence("non-finite loss");
  backward(model, graph, cache, d_out, grad);
  return value;
}

namespace {

// Sign pattern of every same-axis coordinate pair; a change means a finite
// difference straddles a kink of max(.,.).
std::vector<signed char> order_pattern(const Eigen::MatrixXd& out) {
  std::vector<signed char> sig;
  const auto n = out.rows();
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double diff = out(i, k) - out(j, k);
        sig.push_back(static_cast<signed char>((diff > 0) - (diff < 0)));
      }
    }
  }
  return sig;
}

}  // namespace

GradCheckResult grad_check(const MpmcModel& model, const PointSet& inputs, const KnnGraph& graph,
                           LossKind kind, std::size_t samples, std::uint64_t seed) {
  if (inputs.size() > 32 || model.hidden() > 16) {
    throw InvalidArgument("grad_check: limited to n <= 32 and hidden <= 16");
  }
  std::vector<double> grad(model.parameter_count(), 0.0);
  loss_and_gradient(model, inputs, graph, kind, grad);
  for (double g : grad) {
    if (!std::isfinite(g)) throw Divergence("grad_check: non-finite analytic gradient");
  }

  std::vector<std::size_t> idx(model.parameter_count());
  std::iota(idx.begin(), idx.end(), 0);
  Xoshiro256 rng(seed);
  // Partial Fisher-Yates for a seeded subsample.
  const std::size_t m = std::min(samples, idx.size());
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t r = t + static_cast<std::size_t>(rng.below(idx.size() - t));
    std::swap(idx[t], idx[r]);
  }

  constexpr double step = 1e-5;
  MpmcModel probe = model;
  const auto base_pattern = order_pattern(forward(model, inputs, graph));
  GradCheckResult res;
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t p = idx[t];
    const double orig = probe.parameters()[p];
    probe.parameters()[p] = orig + step;
    const Eigen::MatrixXd out_plus = forward(probe, inputs, graph);
    probe.parameters()[p] = orig - step;
    const Eigen::MatrixXd out_minus = forward(probe, inputs, graph);
    probe.parameters()[p] = orig;
    if (order_pattern(out_plus) != base_pattern || order_pattern(out_minus) != base_pattern) {
      ++res.skipped_near_ties;
      continue;
    }
    const double fd = (loss(out_plus, kind) - loss(out_minus, kind)) / (2.0 * step);
    const double a = grad[p];
    const double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
    res.max_relative_error = std::max(res.max_relative_error, std::abs(a - fd) / denom);
    ++res.checked;
  }
  return res;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw InvalidArgument("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void TrainConfig::validate() const {
  if (n < 2) throw InvalidArgument("train: n must be >= 2");
  if (d < 1) throw InvalidArgument("train: d must be >= 1");
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (batch < 1) throw InvalidArgument("train: batch must be >= 1");
  if (!allow_any_batch && batch != 8 && batch != 16 && batch != 32) {
    throw InvalidArgument("train: batch must be 8, 16 or 32 (pass allow_any_batch to override)");
  }
  if (k < 1 || k >= n) throw InvalidArgument("train: need 1 <= k < n");
  if (hidden < d) throw InvalidArgument("train: hidden width must be >= d");
  if (layers < 1) throw InvalidArgument("train: layers must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("train: bad learning rate");
}

TrainResult train(const TrainConfig& cfg, const CheckpointFn& checkpoint) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  // Independent streams: model weights, then one input set per member.
  MpmcModel model = MpmcModel::random(cfg.d, cfg.hidden, cfg.layers, mix64(cfg.seed ^ 0x6d6f64656cULL), cfg.clamp);
  std::vector<PointSet> inputs;
  std::vector<KnnGraph> graphs;
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    inputs.push_back(sample_uniform(cfg.n, cfg.d, mix64(cfg.seed + 0x1000 * (b + 1))));
    graphs.push_back(build_knn_graph(inputs.back(), cfg.k));
  }

  TrainReport report;
  report.threads = cfg.threads;
  if (cfg.n <= 32 && cfg.hidden <= 16) {
    report.grad_check = grad_check(model, inputs[0], graphs[0], cfg.loss, 32, cfg.seed);
    report.grad_check_ran = true;
  }

  Adam opt(model.parameter_count(), cfg.learning_rate);
  std::vector<std::vector<double>> member_grad(cfg.batch, std::vector<double>(model.parameter_count()));
  std::vector<double> member_loss(cfg.batch);
  std::vector<Eigen::MatrixXd> member_out(cfg.batch);
  std::vector<double> total_grad(model.parameter_count());

  report.member_best.assign(cfg.batch, std::numeric_limits<double>::infinity());
  std::vector<Eigen::MatrixXd> best_out(cfg.batch);
  report.best_loss = std::numeric_limits<double>::infinity();

  auto snapshot = [&] {
    std::vector<PointSet> sets;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      sets.push_back(to_points(best_out[b], "mpmc train seed=" + std::to_string(cfg.seed) + " member=" +
                                                std::to_string(b) + " loss=" + std::string(to_string(cfg.loss))));
    }
    return sets;
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    parallel_for(cfg.batch, cfg.threads, [&](std::size_t b) {
      std::fill(member_grad[b].begin(), member_grad[b].end(), 0.0);
      ForwardCache cache;
      member_out[b] = forward(model, inputs[b], graphs[b], &cache);
      Eigen::MatrixXd d_out;
      member_loss[b] = loss(member_out[b], cfg.loss, &d_out);
      backward(model, graphs[b], cache, d_out, member_grad[b]);
    });

    double total = 0.0;
    std::fill(total_grad.begin(), total_grad.end(), 0.0);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      total += member_loss[b];
      for (std::size_t p = 0; p < total_grad.size(); ++p) total_grad[p] += member_grad[b][p];
      if (member_loss[b] < report.member_best[b]) {
        report.member_best[b] = member_loss[b];
        best_out[b] = member_out[b];
      }
    }
    if (!std::isfinite(total)) {
      throw Divergence("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    for (double g : total_grad) {
      if (!std::isfinite(g)) throw Divergence("train: non-finite gradient at epoch " + std::to_string(epoch));
    }
    report.loss_trace.push_back(total);
    if (total < report.best_loss) {
      report.best_loss = total;
      report.best_epoch = epoch;
    }
    report.best_trace.push_back(report.best_loss);

    if (checkpoint && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      checkpoint(epoch + 1, snapshot());
    }
    opt.step(model.parameters(), total_grad);
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return TrainResult{std::move(model), snapshot(), std::move(report)};
}

DirectResult optimize_direct(const TrainConfig& cfg) {
  if (cfg.n < 1 || cfg.d < 1) throw InvalidArgument("optimize_direct: need n >= 1 and d >= 1");
  if (cfg.epochs < 1) throw InvalidArgument("optimize_direct: epochs must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("optimize_direct: bad learning rate");

  const PointSet start = sample_uniform(cfg.n, cfg.d, cfg.seed);
  const auto n = Eigen::Index(cfg.n);
  const auto d = Eigen::Index(cfg.d);
  // Unconstrained parameters z with x = sigmoid(z); inputs are kept away
  // from 0 and 1 so the logit stays finite.
  Eigen::MatrixXd z(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double x = std::clamp(start(std::size_t(i), std::size_t(k)), 1e-6, 1.0 - 1e-6);
      z(i, k) = std::log(x / (1.0 - x));
    }
  }

  DirectResult res{start, {}, 0.0, std::numeric_limits<double>::infinity()};
  Adam opt(std::size_t(n * d), cfg.learning_rate);
  Eigen::MatrixXd best_x;
  Eigen::MatrixXd grad_x;
  std::vector<double> grad_z(std::size_t(n * d));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Eigen::MatrixXd x = z.unaryExpr([](double v) { return sigmoid(v); });
    const double value = loss(x, cfg.loss, &grad_x);
    if (!std::isfinite(value)) throw Divergence("optimize_direct: non-finite loss at epoch " + std::to_string(epoch));
    if (epoch == 0) res.initial_loss = value;
    res.loss_trace.push_back(value);
    if (value < res.best_loss) {
      res.best_loss = value;
      best_x = x;
    }
    const Eigen::MatrixXd gz = grad_x.array() * x.array() * (1.0 - x.array());
    std::copy(gz.data(), gz.data() + gz.size(), grad_z.begin());
    opt.step(std::span<double>(z.data(), std::size_t(z.size())), grad_z);
  }
  res.best = to_points(best_x, "mpmc direct seed=" + std::to_string(cfg.seed) + " loss=" +
                                   std::string(to_string(cfg.loss)));
  return res;
}

std::string report_csv(const TrainReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss,best\n";
  for (std::size_t e = 0; e < report.loss_trace.size(); ++e) {
    out << e << ',' << report.loss_trace[e] << ',' << report.best_trace[e] << '\n';
  }
  return out.str();
}

}  // namespace ldsplan::mpmc
