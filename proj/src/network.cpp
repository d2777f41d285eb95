#include "benes/network.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace benes {

Network::Network(std::vector<int> widths, Activation activation, double bn_momentum)
    : widths_(std::move(widths)), activation_(activation), bn_momentum_(bn_momentum) {
    if (widths_.size() < 2) throw std::invalid_argument("network needs at least input and output widths");
    if (widths_.front() != 1 || widths_.back() != 1)
        throw std::invalid_argument("network input and output widths must be 1");
    for (int w : widths_)
        if (w < 1) throw std::invalid_argument("layer widths must be positive");
    if (!(bn_momentum_ >= 0.0 && bn_momentum_ < 1.0))
        throw std::invalid_argument("batch-norm momentum must lie in [0, 1)");

    Eigen::Index off = 0;
    for (int l = 0; l < dense_layers(); ++l) {
        w_off_.push_back(off);
        off += static_cast<Eigen::Index>(widths_[l]) * widths_[l + 1];
        b_off_.push_back(off);
        off += widths_[l + 1];
    }
    for (int h = 0; h < hidden_layers(); ++h) {
        g_off_.push_back(off);
        off += widths_[h + 1];
        s_off_.push_back(off);
        off += widths_[h + 1];
        running_mean_.push_back(Eigen::VectorXd::Zero(widths_[h + 1]));
        running_var_.push_back(Eigen::VectorXd::Ones(widths_[h + 1]));
    }
    theta_ = Eigen::VectorXd::Zero(off);
    for (int h = 0; h < hidden_layers(); ++h) gamma(h).setOnes();
}

Eigen::Map<Eigen::MatrixXd> Network::weights(int l) {
    return {theta_.data() + w_off_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<const Eigen::MatrixXd> Network::weights(int l) const {
    return {theta_.data() + w_off_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<Eigen::VectorXd> Network::bias(int l) { return {theta_.data() + b_off_[l], widths_[l + 1]}; }
Eigen::Map<const Eigen::VectorXd> Network::bias(int l) const {
    return {theta_.data() + b_off_[l], widths_[l + 1]};
}
Eigen::Map<Eigen::VectorXd> Network::gamma(int h) { return {theta_.data() + g_off_[h], widths_[h + 1]}; }
Eigen::Map<const Eigen::VectorXd> Network::gamma(int h) const {
    return {theta_.data() + g_off_[h], widths_[h + 1]};
}
Eigen::Map<Eigen::VectorXd> Network::shift(int h) { return {theta_.data() + s_off_[h], widths_[h + 1]}; }
Eigen::Map<const Eigen::VectorXd> Network::shift(int h) const {
    return {theta_.data() + s_off_[h], widths_[h + 1]};
}

std::size_t Network::dense_parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < dense_layers(); ++l)
        n += static_cast<std::size_t>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
    return n;
}

std::size_t Network::batch_norm_parameter_count() const {
    std::size_t n = 0;
    for (int h = 0; h < hidden_layers(); ++h) n += 2 * static_cast<std::size_t>(widths_[h + 1]);
    return n;
}

bool operator==(const Network& a, const Network& b) {
    if (a.widths_ != b.widths_ || a.activation_ != b.activation_ || a.bn_momentum_ != b.bn_momentum_)
        return false;
    if (a.theta_.size() != b.theta_.size() || a.theta_ != b.theta_) return false;
    for (int h = 0; h < a.hidden_layers(); ++h)
        if (a.running_mean_[h] != b.running_mean_[h] || a.running_var_[h] != b.running_var_[h]) return false;
    return true;
}

Network init_network(const std::vector<int>& widths, RngSeed rng, Activation activation, double bn_momentum) {
    Network net(widths, activation, bn_momentum);
    Engine engine = make_engine(rng);
    for (int l = 0; l < net.dense_layers(); ++l) {
        const double bound = std::sqrt(6.0 / (widths[l] + widths[l + 1]));
        std::uniform_real_distribution<double> u(-bound, bound);
        auto w = net.weights(l);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(engine);
    }
    return net;
}

namespace {

struct BatchStats {
    std::vector<Eigen::VectorXd> mean;
    std::vector<Eigen::VectorXd> var;
};

struct Cache {
    std::vector<Eigen::MatrixXd> input;  // input to dense layer l
    std::vector<Eigen::MatrixXd> pre;    // batch-norm output before the activation
    std::vector<Eigen::MatrixXd> zhat;   // normalised pre-activation
    std::vector<Eigen::VectorXd> inv_std;
};

Eigen::RowVectorXd run(const Network& net, const Eigen::Ref<const Eigen::RowVectorXd>& x, Mode mode,
                       Cache* cache, BatchStats* stats) {
    const int L = net.dense_layers();
    if (cache) {
        cache->input.resize(L);
        cache->pre.resize(L - 1);
        cache->zhat.resize(L - 1);
        cache->inv_std.resize(L - 1);
    }
    if (stats) {
        stats->mean.resize(L - 1);
        stats->var.resize(L - 1);
    }
    Eigen::MatrixXd a = x;
    for (int l = 0; l < L; ++l) {
        Eigen::MatrixXd z = net.weights(l) * a;
        z.colwise() += net.bias(l);
        if (cache) cache->input[l] = std::move(a);
        if (l == L - 1) return z;

        const int h = l;
        Eigen::VectorXd mean;
        Eigen::VectorXd var;
        if (mode == Mode::train) {
            mean = z.rowwise().mean();
            z.colwise() -= mean;
            var = z.array().square().rowwise().mean();
        } else {
            mean = net.running_mean(h);
            var = net.running_var(h);
            z.colwise() -= mean;
        }
        const Eigen::VectorXd inv_std = (var.array() + kBatchNormEpsilon).rsqrt();
        z.array().colwise() *= inv_std.array();  // z now holds zhat
        Eigen::MatrixXd y = z;
        y.array().colwise() *= net.gamma(h).array();
        y.colwise() += net.shift(h);
        if (net.activation() == Activation::tanh) {
            a = 1.0 - 2.0 / ((2.0 * y.array()).exp() + 1.0);  // vectorised tanh
        } else {
            a = y.cwiseMax(0.0);
        }
        if (cache) {
            cache->zhat[h] = std::move(z);
            cache->pre[h] = std::move(y);
            cache->inv_std[h] = inv_std;
        }
        if (stats) {
            stats->mean[h] = std::move(mean);
            stats->var[h] = std::move(var);
        }
    }
    return a;  // unreachable: the last dense layer returns above
}

void update_running_stats(Network& net, const BatchStats& stats) {
    const double m = net.bn_momentum();
    for (int h = 0; h < net.hidden_layers(); ++h) {
        net.running_mean(h) = m * net.running_mean(h) + (1.0 - m) * stats.mean[h];
        net.running_var(h) = m * net.running_var(h) + (1.0 - m) * stats.var[h];
    }
}

void require_train_batch(std::size_t n) {
    if (n < 2) throw std::invalid_argument("train-mode forward needs a batch of at least 2 inputs");
}

}  // namespace

std::vector<double> forward(Network& net, std::span<const double> inputs, Mode mode) {
    if (inputs.empty()) throw std::invalid_argument("forward needs a non-empty batch");
    if (mode == Mode::eval) return evaluate(net, inputs);
    require_train_batch(inputs.size());
    Eigen::Map<const Eigen::RowVectorXd> x(inputs.data(), static_cast<Eigen::Index>(inputs.size()));
    BatchStats stats;
    const Eigen::RowVectorXd out = run(net, x, Mode::train, nullptr, &stats);
    update_running_stats(net, stats);
    return {out.data(), out.data() + out.size()};
}

void evaluate(const Network& net, std::span<const double> inputs, std::span<double> outputs) {
    if (inputs.size() != outputs.size()) throw std::invalid_argument("evaluate: size mismatch");
    // Eval-mode batch norm is affine, so fold it into the preceding dense layer.
    const int L = net.dense_layers();
    std::vector<Eigen::MatrixXd> w(L);
    std::vector<Eigen::VectorXd> b(L);
    for (int l = 0; l < L; ++l) {
        w[l] = net.weights(l);
        b[l] = net.bias(l);
        if (l == L - 1) break;
        const Eigen::ArrayXd scale =
            net.gamma(l).array() * (net.running_var(l).array() + kBatchNormEpsilon).rsqrt();
        w[l].array().colwise() *= scale;
        b[l] = (scale * (b[l] - net.running_mean(l)).array() + net.shift(l).array()).matrix();
    }
    const bool use_tanh = net.activation() == Activation::tanh;
    constexpr std::size_t kBlock = 2048;
    Eigen::MatrixXd a, z;
    for (std::size_t start = 0; start < inputs.size(); start += kBlock) {
        const std::size_t n = std::min(kBlock, inputs.size() - start);
        a = Eigen::Map<const Eigen::RowVectorXd>(inputs.data() + start, static_cast<Eigen::Index>(n));
        for (int l = 0; l < L; ++l) {
            z.noalias() = w[l] * a;
            z.colwise() += b[l];
            if (l == L - 1) break;
            if (use_tanh)
                a = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
            else
                a = z.cwiseMax(0.0);
        }
        std::copy(z.data(), z.data() + n, outputs.begin() + static_cast<std::ptrdiff_t>(start));
    }
}

std::vector<double> evaluate(const Network& net, std::span<const double> inputs) {
    std::vector<double> out(inputs.size());
    evaluate(net, inputs, out);
    return out;
}

LossResult loss_and_gradient(Network& net, std::span<const double> inputs, std::span<const double> targets,
                             double lambda, PenaltyForm penalty, PenaltyScale scale) {
    if (inputs.empty()) throw std::invalid_argument("loss needs a non-empty batch");
    if (inputs.size() != targets.size()) throw std::invalid_argument("inputs/targets size mismatch");
    require_train_batch(inputs.size());

    const auto B = static_cast<Eigen::Index>(inputs.size());
    Eigen::Map<const Eigen::RowVectorXd> x(inputs.data(), B);
    Eigen::Map<const Eigen::RowVectorXd> y(targets.data(), B);
    Cache cache;
    BatchStats stats;
    const Eigen::RowVectorXd out = run(net, x, Mode::train, &cache, &stats);

    LossResult res;
    const Eigen::RowVectorXd resid = out - y;
    res.data_loss = resid.squaredNorm() / static_cast<double>(B);
    Eigen::MatrixXd dz = (2.0 / static_cast<double>(B)) * resid;
    const double weight = scale == PenaltyScale::batch_mean ? lambda / static_cast<double>(B) : lambda;
    double pen = 0.0;
    for (Eigen::Index i = 0; i < B; ++i) {
        const double o = out(i);
        if (penalty == PenaltyForm::negative_part && o < 0.0) {
            pen -= o;
            dz(0, i) -= weight;
        } else if (penalty == PenaltyForm::literal && o > 0.0) {
            pen += o;
            dz(0, i) += weight;
        }
    }
    res.penalty = weight * pen;
    res.loss = res.data_loss + res.penalty;

    // Gradient views share the parameter layout of the net.
    Network grad_view = net;
    grad_view.parameters().setZero();
    const int L = net.dense_layers();
    for (int l = L - 1; l >= 0; --l) {
        grad_view.weights(l).noalias() = dz * cache.input[l].transpose();
        grad_view.bias(l) = dz.rowwise().sum();
        if (l == 0) break;

        const int h = l - 1;
        Eigen::MatrixXd da = net.weights(l).transpose() * dz;
        if (net.activation() == Activation::tanh) {
            da.array() *= 1.0 - cache.input[l].array().square();
        } else {
            da.array() *= (cache.pre[h].array() > 0.0).cast<double>();
        }
        // da now holds dL/d(batch-norm output)
        const Eigen::MatrixXd& zhat = cache.zhat[h];
        grad_view.gamma(h) = (da.array() * zhat.array()).rowwise().sum();
        grad_view.shift(h) = da.rowwise().sum();
        da.array().colwise() *= net.gamma(h).array();  // dL/dzhat
        const Eigen::VectorXd sum_d = da.rowwise().sum();
        const Eigen::VectorXd sum_dz = (da.array() * zhat.array()).rowwise().sum();
        const double inv_b = 1.0 / static_cast<double>(B);
        dz = da;
        dz.colwise() -= sum_d * inv_b;
        dz.array() -= zhat.array().colwise() * (sum_dz.array() * inv_b);
        dz.array().colwise() *= cache.inv_std[h].array();
    }
    res.gradient = std::move(grad_view.parameters());
    update_running_stats(net, stats);
    return res;
}

void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& s, double lr) {
    if (grad.size() != theta.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
    if (s.first_moment.size() != theta.size()) {
        if (s.step_count != 0) throw std::invalid_argument("adam_step: optimiser state shape mismatch");
        s.first_moment = Eigen::VectorXd::Zero(theta.size());
        s.second_moment = Eigen::VectorXd::Zero(theta.size());
    }
    ++s.step_count;
    s.first_moment = s.beta1 * s.first_moment + (1.0 - s.beta1) * grad;
    s.second_moment = s.beta2 * s.second_moment + (1.0 - s.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
    theta.array() -= lr * (s.first_moment.array() / c1) / ((s.second_moment.array() / c2).sqrt() + s.epsilon);
}

double LearningRateSchedule::operator()(int epoch) const {
    if (epoch < 0) throw std::invalid_argument("epoch must be non-negative");
    return base * std::pow(10.0, -static_cast<double>(epoch / plateau));
}

double lr_schedule(int epoch) { return LearningRateSchedule{}(epoch); }

void TrainingConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2 (batch normalisation)");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    if (lr.plateau < 1 || !(lr.base > 0.0)) throw std::invalid_argument("invalid learning-rate schedule");
    if (trace_every < 0) throw std::invalid_argument("trace_every must be non-negative");
}

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Activation parse_activation(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

// ---- checkpoints ---------------------------------------------------------------------------
// Text layout, one token group per line, doubles in hexfloat so a round trip is bit-exact:
//   benes-network 1
//   widths <L+1> <w_0> ... <w_L>
//   activation <tanh|relu>
//   bn_momentum <x>
//   parameters <n> <x>...
//   running <h> <mean x>... <var x>...   (one line per hidden layer)
//   end

namespace {

constexpr const char* kMagic = "benes-network";
constexpr int kVersion = 1;

double read_hex(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("corrupted checkpoint: truncated value list");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw std::runtime_error("corrupted checkpoint: bad number '" + tok + "'");
    return v;
}

void expect(std::istream& in, const std::string& word) {
    std::string tok;
    if (!(in >> tok) || tok != word)
        throw std::runtime_error("corrupted checkpoint: expected '" + word + "', found '" + tok + "'");
}

}  // namespace

void save_network(std::ostream& out, const Network& net) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "widths " << net.widths().size();
    for (int w : net.widths()) out << ' ' << w;
    out << "\nactivation " << to_string(net.activation()) << '\n';
    out << std::hexfloat;
    out << "bn_momentum " << net.bn_momentum() << '\n';
    out << "parameters " << std::dec << net.parameters().size() << std::hexfloat;
    for (double v : net.parameters()) out << ' ' << v;
    out << '\n';
    for (int h = 0; h < net.hidden_layers(); ++h) {
        out << "running " << std::dec << h << std::hexfloat;
        for (double v : net.running_mean(h)) out << ' ' << v;
        for (double v : net.running_var(h)) out << ' ' << v;
        out << '\n';
    }
    out << std::defaultfloat << "end\n";
}

Network load_network(std::istream& in) {
    expect(in, kMagic);
    int version = 0;
    if (!(in >> version) || version != kVersion)
        throw std::runtime_error("corrupted checkpoint: unsupported version");
    expect(in, "widths");
    std::size_t n_widths = 0;
    if (!(in >> n_widths) || n_widths < 2 || n_widths > 64)
        throw std::runtime_error("corrupted checkpoint: bad width count");
    std::vector<int> widths(n_widths);
    for (auto& w : widths)
        if (!(in >> w) || w < 1 || w > 100000) throw std::runtime_error("corrupted checkpoint: bad width");
    expect(in, "activation");
    std::string act;
    in >> act;
    Activation activation;
    try {
        activation = parse_activation(act);
    } catch (const std::invalid_argument&) {
        throw std::runtime_error("corrupted checkpoint: unknown activation '" + act + "'");
    }
    expect(in, "bn_momentum");
    const double momentum = read_hex(in);
    Network net;
    try {
        net = Network(widths, activation, momentum);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("corrupted checkpoint: ") + e.what());
    }
    expect(in, "parameters");
    long count = 0;
    if (!(in >> count) || count != net.parameters().size())
        throw std::runtime_error("corrupted checkpoint: parameter count does not match widths");
    for (auto& v : net.parameters()) v = read_hex(in);
    for (int h = 0; h < net.hidden_layers(); ++h) {
        expect(in, "running");
        int idx = -1;
        if (!(in >> idx) || idx != h) throw std::runtime_error("corrupted checkpoint: bad running-stat layer");
        for (auto& v : net.running_mean(h)) v = read_hex(in);
        for (auto& v : net.running_var(h)) {
            v = read_hex(in);
            if (!(v >= 0.0)) throw std::runtime_error("corrupted checkpoint: negative running variance");
        }
    }
    expect(in, "end");
    return net;
}

void save_network(const std::filesystem::path& path, const Network& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    save_network(out, net);
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
    return load_network(in);
}

}  // namespace benes
