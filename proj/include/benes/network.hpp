#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "benes/random.hpp"

namespace benes {

enum class Activation { tanh, relu };
enum class Mode { train, eval };

// Which outputs the positivity penalty punishes. `negative_part` is lambda*sum max{0,-NN};
// `literal` reproduces lambda*sum max{0,NN} as printed.
enum class PenaltyForm { negative_part, literal };

// `batch_mean` scales the penalty by 1/N_b like the data term; `batch_sum` is the plain sum.
enum class PenaltyScale { batch_mean, batch_sum };

inline constexpr double kBatchNormEpsilon = 1e-5;

// Fully connected net with batch normalisation on every hidden pre-activation.
// Trainable parameters live in one contiguous vector so that optimiser state,
// gradients and checkpoints all share its layout:
//   [W_0, b_0, W_1, b_1, ..., W_{L-1}, b_{L-1}, gamma_0, shift_0, ..., gamma_{L-2}, shift_{L-2}]
// W_l is stored column-major with shape (widths[l+1], widths[l]).
class Network {
public:
    Network() = default;
    Network(std::vector<int> widths, Activation activation, double bn_momentum = 0.9);

    const std::vector<int>& widths() const { return widths_; }
    int dense_layers() const { return static_cast<int>(widths_.size()) - 1; }
    int hidden_layers() const { return dense_layers() - 1; }
    Activation activation() const { return activation_; }
    double bn_momentum() const { return bn_momentum_; }

    Eigen::VectorXd& parameters() { return theta_; }
    const Eigen::VectorXd& parameters() const { return theta_; }

    Eigen::Map<Eigen::MatrixXd> weights(int l);
    Eigen::Map<const Eigen::MatrixXd> weights(int l) const;
    Eigen::Map<Eigen::VectorXd> bias(int l);
    Eigen::Map<const Eigen::VectorXd> bias(int l) const;
    Eigen::Map<Eigen::VectorXd> gamma(int h);
    Eigen::Map<const Eigen::VectorXd> gamma(int h) const;
    Eigen::Map<Eigen::VectorXd> shift(int h);
    Eigen::Map<const Eigen::VectorXd> shift(int h) const;

    Eigen::VectorXd& running_mean(int h) { return running_mean_[h]; }
    const Eigen::VectorXd& running_mean(int h) const { return running_mean_[h]; }
    Eigen::VectorXd& running_var(int h) { return running_var_[h]; }
    const Eigen::VectorXd& running_var(int h) const { return running_var_[h]; }

    // sum over dense layers of in*out + out
    std::size_t dense_parameter_count() const;
    // gamma and shift of every batch-norm layer
    std::size_t batch_norm_parameter_count() const;

    friend bool operator==(const Network& a, const Network& b);

private:
    std::vector<int> widths_;
    Activation activation_ = Activation::tanh;
    double bn_momentum_ = 0.9;
    Eigen::VectorXd theta_;
    std::vector<Eigen::VectorXd> running_mean_;
    std::vector<Eigen::VectorXd> running_var_;
    std::vector<Eigen::Index> w_off_, b_off_, g_off_, s_off_;
};

// Glorot-uniform weights, zero biases, gamma = 1, shift = 0, running stats (0, 1).
Network init_network(const std::vector<int>& widths, RngSeed rng, Activation activation = Activation::tanh,
                     double bn_momentum = 0.9);

// Train mode normalises with batch statistics (batch size >= 2) and updates the running
// statistics; eval mode uses the running statistics and leaves the net untouched.
std::vector<double> forward(Network& net, std::span<const double> inputs, Mode mode);

// Eval-mode forward pass on a const net.
void evaluate(const Network& net, std::span<const double> inputs, std::span<double> outputs);
std::vector<double> evaluate(const Network& net, std::span<const double> inputs);

struct LossResult {
    double loss = 0.0;       // data term + penalty
    double data_loss = 0.0;  // (1/N_b) sum |target - NN|^2
    double penalty = 0.0;    // lambda times the (mean or summed) penalised part
    Eigen::VectorXd gradient;
};

// Train-mode loss and its reverse-mode gradient; updates the running statistics like a
// training forward pass does.
LossResult loss_and_gradient(Network& net, std::span<const double> inputs, std::span<const double> targets,
                             double lambda, PenaltyForm penalty = PenaltyForm::negative_part,
                             PenaltyScale scale = PenaltyScale::batch_mean);

struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamState() = default;
    explicit AdamState(Eigen::Index n)
        : first_moment(Eigen::VectorXd::Zero(n)), second_moment(Eigen::VectorXd::Zero(n)) {}
};

void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& state, double lr);
inline void adam_step(Network& net, const Eigen::VectorXd& grad, AdamState& state, double lr) {
    adam_step(net.parameters(), grad, state, lr);
}

// Piecewise constant: base * 10^-(epoch / plateau), i.e. 1e-2, 1e-3, 1e-4 over 2001 epochs each.
struct LearningRateSchedule {
    double base = 1e-2;
    int plateau = 2001;

    double operator()(int epoch) const;
};

double lr_schedule(int epoch);

struct TrainingConfig {
    int epochs = 6002;
    int batch_size = 600;
    double lambda = 1.0;
    Activation activation = Activation::tanh;
    PenaltyForm penalty = PenaltyForm::negative_part;
    PenaltyScale penalty_scale = PenaltyScale::batch_mean;
    LearningRateSchedule lr;
    std::vector<int> widths{1, 51, 51, 1};
    double bn_momentum = 0.9;
    int trace_every = 200;    // cadence of the L2-vs-reference trace, 0 disables
    bool warm_start = false;  // start from the previous step's net instead of a fresh init

    void validate() const;
};

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

void save_network(std::ostream& out, const Network& net);
Network load_network(std::istream& in);
void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

}  // namespace benes
