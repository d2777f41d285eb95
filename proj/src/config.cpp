#include "benes/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "benes/csv.hpp"

namespace benes {

std::string to_string(DomainMode mode) { return mode == DomainMode::fixed ? "fixed" : "adapted"; }

DomainMode parse_domain_mode(const std::string& s) {
    if (s == "fixed") return DomainMode::fixed;
    if (s == "adapted") return DomainMode::adapted;
    throw std::invalid_argument("domain mode must be 'fixed' or 'adapted', got '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& v) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
    return x;
}

long to_integer(const std::string& v) {
    // accepts 1e7-style literals as long as they are integral
    const double x = to_real(v);
    if (x != std::floor(x) || std::abs(x) > 9e18) throw std::invalid_argument("expected an integer, got '" + v + "'");
    return static_cast<long>(x);
}

std::uint64_t to_seed(const std::string& v) {
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw std::invalid_argument("expected an unsigned seed, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("expected true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"alpha", [](RunConfig& c, const std::string& v) { c.model.alpha = to_real(v); }},
        {"beta", [](RunConfig& c, const std::string& v) { c.model.beta = to_real(v); }},
        {"sigma", [](RunConfig& c, const std::string& v) { c.model.sigma = to_real(v); }},
        {"h1", [](RunConfig& c, const std::string& v) { c.model.h1 = to_real(v); }},
        {"h2", [](RunConfig& c, const std::string& v) { c.model.h2 = to_real(v); }},
        {"x0", [](RunConfig& c, const std::string& v) { c.model.x0 = to_real(v); }},
        {"dt", [](RunConfig& c, const std::string& v) { c.grid.dt = to_real(v); }},
        {"steps", [](RunConfig& c, const std::string& v) { c.grid.n_steps = static_cast<int>(to_integer(v)); }},
        {"substeps", [](RunConfig& c, const std::string& v) { c.grid.substeps = static_cast<int>(to_integer(v)); }},
        {"prior_mean", [](RunConfig& c, const std::string& v) { c.prior_mean = to_real(v); }},
        {"prior_std", [](RunConfig& c, const std::string& v) { c.prior_std = to_real(v); }},
        {"domain_mode", [](RunConfig& c, const std::string& v) { c.domain_mode = parse_domain_mode(v); }},
        {"domain_lo", [](RunConfig& c, const std::string& v) { c.domain.lo = to_real(v); }},
        {"domain_hi", [](RunConfig& c, const std::string& v) { c.domain.hi = to_real(v); }},
        {"resolution", [](RunConfig& c, const std::string& v) { c.domain.resolution = static_cast<int>(to_integer(v)); }},
        {"pad_stds", [](RunConfig& c, const std::string& v) { c.pad_stds = to_real(v); }},
        {"epochs", [](RunConfig& c, const std::string& v) { c.training.epochs = static_cast<int>(to_integer(v)); }},
        {"batch_size", [](RunConfig& c, const std::string& v) { c.training.batch_size = static_cast<int>(to_integer(v)); }},
        {"lambda", [](RunConfig& c, const std::string& v) { c.training.lambda = to_real(v); }},
        {"activation", [](RunConfig& c, const std::string& v) { c.training.activation = parse_activation(v); }},
        {"penalty", [](RunConfig& c, const std::string& v) {
             if (v == "negative_part") c.training.penalty = PenaltyForm::negative_part;
             else if (v == "literal") c.training.penalty = PenaltyForm::literal;
             else throw std::invalid_argument("penalty must be 'negative_part' or 'literal'");
         }},
        {"penalty_scale", [](RunConfig& c, const std::string& v) {
             if (v == "mean") c.training.penalty_scale = PenaltyScale::batch_mean;
             else if (v == "sum") c.training.penalty_scale = PenaltyScale::batch_sum;
             else throw std::invalid_argument("penalty_scale must be 'mean' or 'sum'");
         }},
        {"lr_base", [](RunConfig& c, const std::string& v) { c.training.lr.base = to_real(v); }},
        {"lr_plateau", [](RunConfig& c, const std::string& v) { c.training.lr.plateau = static_cast<int>(to_integer(v)); }},
        {"bn_momentum", [](RunConfig& c, const std::string& v) { c.training.bn_momentum = to_real(v); }},
        {"hidden_width", [](RunConfig& c, const std::string& v) {
             const int w = static_cast<int>(to_integer(v));
             for (std::size_t i = 1; i + 1 < c.training.widths.size(); ++i) c.training.widths[i] = w;
         }},
        {"hidden_layers", [](RunConfig& c, const std::string& v) {
             const int n = static_cast<int>(to_integer(v));
             if (n < 0 || n > 16) throw std::invalid_argument("hidden_layers must be in [0, 16]");
             const int w = c.training.widths.size() > 2 ? c.training.widths[1] : 51;
             c.training.widths.assign(static_cast<std::size_t>(n) + 2, w);
             c.training.widths.front() = 1;
             c.training.widths.back() = 1;
         }},
        {"trace_every", [](RunConfig& c, const std::string& v) { c.training.trace_every = static_cast<int>(to_integer(v)); }},
        {"warm_start", [](RunConfig& c, const std::string& v) { c.training.warm_start = to_bool(v); }},
        {"mc_samples", [](RunConfig& c, const std::string& v) { c.mc_samples = to_integer(v); }},
        {"reference_samples", [](RunConfig& c, const std::string& v) { c.reference_samples = static_cast<int>(to_integer(v)); }},
        {"particles", [](RunConfig& c, const std::string& v) { c.particles = static_cast<int>(to_integer(v)); }},
        {"resample_threshold", [](RunConfig& c, const std::string& v) { c.resample_threshold = to_real(v); }},
        {"benes_formula", [](RunConfig& c, const std::string& v) {
             if (v == "corrected") c.exact.formula = BenesFormula::corrected;
             else if (v == "literal") c.exact.formula = BenesFormula::literal;
             else throw std::invalid_argument("benes_formula must be 'corrected' or 'literal'");
         }},
        {"benes_integral", [](RunConfig& c, const std::string& v) {
             if (v == "trapezoid") c.exact.rule = IntegralRule::trapezoid;
             else if (v == "left") c.exact.rule = IntegralRule::left;
             else throw std::invalid_argument("benes_integral must be 'trapezoid' or 'left'");
         }},
        {"seed_signal", [](RunConfig& c, const std::string& v) { c.seed_signal = to_seed(v); }},
        {"seed_observation", [](RunConfig& c, const std::string& v) { c.seed_observation = to_seed(v); }},
        {"seed_training", [](RunConfig& c, const std::string& v) { c.seed_training = to_seed(v); }},
        {"seed_normalization", [](RunConfig& c, const std::string& v) { c.seed_normalization = to_seed(v); }},
        {"seed_reference", [](RunConfig& c, const std::string& v) { c.seed_reference = to_seed(v); }},
        {"seed_particle", [](RunConfig& c, const std::string& v) { c.seed_particle = to_seed(v); }},
        {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
        {"signal_csv", [](RunConfig& c, const std::string& v) { c.signal_csv = v; }},
        {"observation_csv", [](RunConfig& c, const std::string& v) { c.observation_csv = v; }},
    };
    return table;
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
    throw ConfigError("invalid value for '" + key + "': " + why);
}

}  // namespace

void RunConfig::validate() const {
    if (!(model.sigma > 0.0)) invalid("sigma", "must be positive");
    if (model.h1 == 0.0) invalid("h1", "must be non-zero");
    if (!(grid.dt > 0.0)) invalid("dt", "must be positive");
    if (grid.n_steps < 1) invalid("steps", "must be at least 1");
    if (grid.substeps < 1) invalid("substeps", "must be at least 1");
    if (!(prior_std > 0.0)) invalid("prior_std", "must be positive");
    if (!(domain.lo < domain.hi)) invalid("domain_lo", "must be below domain_hi");
    if (domain.resolution < 2) invalid("resolution", "must be at least 2");
    if (!(pad_stds >= 0.0)) invalid("pad_stds", "must be non-negative");
    if (training.epochs < 1) invalid("epochs", "must be at least 1");
    if (training.batch_size < 2) invalid("batch_size", "must be at least 2");
    if (!(training.lambda >= 0.0)) invalid("lambda", "must be non-negative");
    if (!(training.lr.base > 0.0)) invalid("lr_base", "must be positive");
    if (training.lr.plateau < 1) invalid("lr_plateau", "must be at least 1");
    if (!(training.bn_momentum >= 0.0 && training.bn_momentum < 1.0)) invalid("bn_momentum", "must lie in [0, 1)");
    for (std::size_t i = 1; i + 1 < training.widths.size(); ++i)
        if (training.widths[i] < 1) invalid("hidden_width", "must be positive");
    if (training.trace_every < 0) invalid("trace_every", "must be non-negative");
    if (mc_samples < 1) invalid("mc_samples", "must be at least 1");
    if (reference_samples < 0) invalid("reference_samples", "must be non-negative");
    if (particles < 1) invalid("particles", "must be at least 1");
    if (!(resample_threshold >= 0.0 && resample_threshold <= 1.0)) invalid("resample_threshold", "must lie in [0, 1]");
    if (output_dir.empty()) invalid("output_dir", "must not be empty");
    if (signal_csv.empty() != observation_csv.empty())
        invalid(signal_csv.empty() ? "signal_csv" : "observation_csv", "signal_csv and observation_csv go together");
}

RunConfig parse_config(std::istream& in, const std::string& source) {
    RunConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
        try {
            it->second(c, value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in, path.string());
}

std::string format_config(const RunConfig& c) {
    std::ostringstream o;
    auto kv = [&](const char* key, const std::string& v) { o << key << " = " << v << '\n'; };
    auto real = [&](const char* key, double v) { kv(key, format_double(v)); };
    o << "# model\n";
    real("alpha", c.model.alpha);
    real("beta", c.model.beta);
    real("sigma", c.model.sigma);
    real("h1", c.model.h1);
    real("h2", c.model.h2);
    real("x0", c.model.x0);
    o << "# time grid\n";
    real("dt", c.grid.dt);
    kv("steps", std::to_string(c.grid.n_steps));
    kv("substeps", std::to_string(c.grid.substeps));
    o << "# prior and domain\n";
    real("prior_mean", c.prior_mean);
    real("prior_std", c.prior_std);
    kv("domain_mode", to_string(c.domain_mode));
    real("domain_lo", c.domain.lo);
    real("domain_hi", c.domain.hi);
    kv("resolution", std::to_string(c.domain.resolution));
    real("pad_stds", c.pad_stds);
    o << "# training\n";
    kv("epochs", std::to_string(c.training.epochs));
    kv("batch_size", std::to_string(c.training.batch_size));
    real("lambda", c.training.lambda);
    kv("activation", to_string(c.training.activation));
    kv("penalty", c.training.penalty == PenaltyForm::negative_part ? "negative_part" : "literal");
    kv("penalty_scale", c.training.penalty_scale == PenaltyScale::batch_mean ? "mean" : "sum");
    real("lr_base", c.training.lr.base);
    kv("lr_plateau", std::to_string(c.training.lr.plateau));
    real("bn_momentum", c.training.bn_momentum);
    kv("hidden_layers", std::to_string(c.training.widths.size() - 2));
    if (c.training.widths.size() > 2) kv("hidden_width", std::to_string(c.training.widths[1]));
    kv("trace_every", std::to_string(c.training.trace_every));
    kv("warm_start", c.training.warm_start ? "true" : "false");
    o << "# normalisation and references\n";
    kv("mc_samples", std::to_string(c.mc_samples));
    kv("reference_samples", std::to_string(c.reference_samples));
    kv("particles", std::to_string(c.particles));
    real("resample_threshold", c.resample_threshold);
    kv("benes_formula", c.exact.formula == BenesFormula::corrected ? "corrected" : "literal");
    kv("benes_integral", c.exact.rule == IntegralRule::trapezoid ? "trapezoid" : "left");
    o << "# seeds\n";
    kv("seed_signal", std::to_string(c.seed_signal));
    kv("seed_observation", std::to_string(c.seed_observation));
    kv("seed_training", std::to_string(c.seed_training));
    kv("seed_normalization", std::to_string(c.seed_normalization));
    kv("seed_reference", std::to_string(c.seed_reference));
    kv("seed_particle", std::to_string(c.seed_particle));
    kv("output_dir", c.output_dir);
    if (!c.signal_csv.empty()) kv("signal_csv", c.signal_csv);
    if (!c.observation_csv.empty()) kv("observation_csv", c.observation_csv);
    return o.str();
}

}  // namespace benes
