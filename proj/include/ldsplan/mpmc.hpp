#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldsplan/discrepancy.hpp"
#include "ldsplan/pointset.hpp"

namespace ldsplan::mpmc {

enum class LossKind { L2, Hickernell };
enum class ClampMode { Sigmoid, Hard };

std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view s);

/// Neighbour lists built once from the initial input positions.
struct KnnGraph {
  std::vector<std::vector<std::size_t>> neighbors;  // sorted ascending
  std::size_t k = 0;
  bool symmetric = true;

  std::size_t size() const { return neighbors.size(); }
  std::size_t edge_count() const;
};

/// k nearest other nodes per node (Euclidean, ties to the lower index),
/// optionally closed under symmetry (an edge survives if either end picks it).
KnnGraph build_knn_graph(const PointSet& inputs, std::size_t k, bool symmetrize = true);

/// Encoder, L message-passing layers and decoder, all weights in one flat
/// buffer so the optimizer and gradient checks can treat them as a vector.
///
///   H0      = tanh(X We + be)
///   m_ij    = tanh([H_i, H_j, X_j - X_i] Wm + bm)    for j in N(i)
///   a_i     = mean_j m_ij
///   H'_i    = H_i + tanh([H_i, a_i] Wu + bu)
///   output  = squash(H_L Wd + bd)
///
/// Weight matrices are column-major (fan_in x fan_out).
class MpmcModel {
 public:
  MpmcModel(std::size_t dim, std::size_t hidden, std::size_t layers,
            ClampMode clamp = ClampMode::Sigmoid);

  /// Glorot-uniform weights, zero biases.
  static MpmcModel random(std::size_t dim, std::size_t hidden, std::size_t layers,
                          std::uint64_t seed, ClampMode clamp = ClampMode::Sigmoid);

  std::size_t dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t layers() const { return layers_; }
  ClampMode clamp() const { return clamp_; }
  void set_clamp(ClampMode c) { clamp_ = c; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  struct Block {
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
  };
  struct LayerBlocks {
    Block msg_w, msg_b, upd_w, upd_b;
  };
  Block encoder_w() const { return enc_w_; }
  Block encoder_b() const { return enc_b_; }
  const LayerBlocks& layer(std::size_t l) const { return layer_blocks_[l]; }
  Block decoder_w() const { return dec_w_; }
  Block decoder_b() const { return dec_b_; }

  using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
  using Map = Eigen::Map<Eigen::MatrixXd>;
  ConstMap view(Block b) const { return {params_.data() + b.offset, Eigen::Index(b.rows), Eigen::Index(b.cols)}; }
  Map view(Block b) { return {params_.data() + b.offset, Eigen::Index(b.rows), Eigen::Index(b.cols)}; }

 private:
  Block take(std::size_t rows, std::size_t cols);

  std::size_t dim_;
  std::size_t hidden_;
  std::size_t layers_;
  ClampMode clamp_;
  std::size_t cursor_ = 0;
  Block enc_w_{}, enc_b_{}, dec_w_{}, dec_b_{};
  std::vector<LayerBlocks> layer_blocks_;
  std::vector<double> params_;
};

/// Activations kept for the backward pass.
struct ForwardCache {
  Eigen::MatrixXd inputs;                 // n x d
  std::vector<Eigen::MatrixXd> states;    // L+1 matrices, n x h
  std::vector<Eigen::MatrixXd> messages;  // per layer, edges x h (tanh output)
  std::vector<Eigen::MatrixXd> aggregates;  // per layer, n x h
  std::vector<Eigen::MatrixXd> updates;   // per layer, tanh of the update, n x h
  Eigen::MatrixXd logits;                 // n x d
  Eigen::MatrixXd outputs;                // n x d, in [0,1]
};

/// Runs the network; throws Divergence on non-finite activations.
Eigen::MatrixXd forward(const MpmcModel& model, const PointSet& inputs, const KnnGraph& graph,
                        ForwardCache* cache = nullptr);
PointSet forward_points(const MpmcModel& model, const PointSet& inputs, const KnnGraph& graph);

/// Adds dLoss/dparams to `grad` given dLoss/doutputs (n x d).
void backward(const MpmcModel& model, const KnnGraph& graph, const ForwardCache& cache,
              const Eigen::MatrixXd& d_outputs, std::span<double> grad);

/// Squared Warnock L2 (kind=L2) or squared Hickernell L2 (kind=Hickernell).
double loss(const PointSet& ps, LossKind kind);
/// Same on a raw n x d matrix, optionally with the coordinate gradient.
double loss(const Eigen::MatrixXd& points, LossKind kind, Eigen::MatrixXd* grad = nullptr);

/// loss(forward(...)) and its parameter gradient.
double loss_and_gradient(const MpmcModel& model, const PointSet& inputs, const KnnGraph& graph,
                         LossKind kind, std::span<double> grad);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  /// Parameters whose +-step perturbation reorders some coordinate pair,
  /// i.e. crosses a kink of max(.,.).
  std::size_t skipped_near_ties = 0;
};

/// Central finite differences (step 1e-5) against the analytic gradient on a
/// seeded subsample of parameters. Relative error uses
/// |a - f| / max(|a|, |f|, 1e-8). Refuses n > 32 or h > 16.
GradCheckResult grad_check(const MpmcModel& model, const PointSet& inputs, const KnnGraph& graph,
                           LossKind kind, std::size_t samples = 64, std::uint64_t seed = 1);

/// Adaptive-moment optimizer (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  explicit Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

struct TrainConfig {
  std::size_t n = 64;
  std::size_t d = 2;
  std::size_t batch = 8;
  std::size_t k = 8;
  std::size_t hidden = 64;
  std::size_t layers = 3;
  std::size_t epochs = 2000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::L2;
  ClampMode clamp = ClampMode::Sigmoid;
  /// 0 disables checkpoint callbacks.
  std::size_t checkpoint_every = 0;
  /// Batch members are processed on this many threads. Gradients are summed
  /// in member order, so results match the single-threaded run.
  unsigned threads = 1;
  /// Accept batch sizes outside {8, 16, 32}.
  bool allow_any_batch = false;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_trace;  // summed batch loss per epoch
  std::vector<double> best_trace;  // running minimum of loss_trace
  double best_loss = 0.0;
  std::size_t best_epoch = 0;
  /// Per-member best loss.
  std::vector<double> member_best;
  /// Gradient check at initialization on the first member, when the
  /// instance is small enough; otherwise ran == false.
  bool grad_check_ran = false;
  GradCheckResult grad_check;
  double wall_seconds = 0.0;
  unsigned threads = 1;
};

struct TrainResult {
  MpmcModel model;
  std::vector<PointSet> best_sets;
  TrainReport report;
};

using CheckpointFn = std::function<void(std::size_t epoch, const std::vector<PointSet>& best_sets)>;

/// Trains one model on `batch` independent random inputs with the summed loss.
/// Throws Divergence on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const CheckpointFn& checkpoint = {});

struct DirectResult {
  PointSet best;
  std::vector<double> loss_trace;
  double initial_loss = 0.0;
  double best_loss = 0.0;
};

/// Network-free ablation: Adam directly on pre-sigmoid coordinates, starting
/// from uniform(seed) inputs. Uses n, d, epochs, learning_rate, seed, loss.
DirectResult optimize_direct(const TrainConfig& cfg);

/// Writes the loss trace as CSV (epoch,loss,best).
std::string report_csv(const TrainReport& report);

}  // namespace ldsplan::mpmc
