#include "bayesev/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

#include "bayesev/datagen.hpp"

namespace bayesev {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void append_ns(std::ostringstream& os, const std::string& tag, const NsConfig& c) {
    os << tag << ".n_live=" << c.n_live << '\n'
       << tag << ".max_iterations=" << c.max_iterations << '\n'
       << tag << ".steps_per_replacement=" << c.steps_per_replacement << '\n'
       << tag << ".initial_step_sizes=";
    for (double s : c.initial_step_sizes) os << format_double(s) << ',';
    os << '\n'
       << tag << ".target_acceptance=" << format_double(c.target_acceptance) << '\n'
       << tag << ".stop_delta_logz=" << format_double(c.stop_delta_logz) << '\n'
       << tag << ".stop_info_factor=" << format_double(c.stop_info_factor) << '\n'
       << tag << ".retry_budget=" << c.retry_budget << '\n';
}

double plugin_log_likelihood(const Dataset& data, Family family, int model_id, const ParameterVector& report) {
    if (family == Family::polynomial) {
        const std::span<const double> w(report.data(), static_cast<std::size_t>(model_id));
        const double sigma = report.back();
        return poly_log_likelihood(data, w, 1.0 / (sigma * sigma));
    }
    const auto S = static_cast<std::size_t>(model_id);
    MixtureParams p;
    p.means.assign(report.begin(), report.begin() + static_cast<std::ptrdiff_t>(S));
    p.sigmas.assign(report.begin() + static_cast<std::ptrdiff_t>(S), report.begin() + static_cast<std::ptrdiff_t>(2 * S));
    p.weights.assign(report.begin() + static_cast<std::ptrdiff_t>(2 * S), report.end());
    return gmm_log_likelihood(data, p);
}

void fit_ns(SweepRecord& rec, const Dataset& data, Family family, int model_id, const HarnessConfig& cfg) {
    NsConfig ns = family == Family::polynomial ? cfg.ns_polynomial : cfg.ns_gmm;
    ns.seed = rec.seed;
    std::unique_ptr<Model> model;
    if (family == Family::polynomial) {
        model = std::make_unique<PolynomialModel>(data, model_id);
    } else {
        model = std::make_unique<GmmModel>(data, model_id);
    }
    EvidenceEstimate est;
    try {
        est = run_nested(*model, ns);
    } catch (const IterationLimitReached& e) {
        est = e.partial();
        rec.warning = e.what();
    }
    rec.wall_time = est.wall_time;
    const auto post = summarize_posterior(est, *model);
    rec.score = est.log_z;
    rec.score_uncertainty = est.log_z_uncertainty;
    rec.parameter_names = model->report_names();
    rec.parameters = post.mean;
}

void fit_vb(SweepRecord& rec, const Dataset& data, Family family, int model_id, const HarnessConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (family == Family::polynomial) {
        const auto fit = vb_linear_fit(data, model_id, cfg.vb_linear_prior, cfg.vb_linear_options);
        rec.wall_time = seconds_since(t0);
        rec.score = fit.bound;
        rec.warning = fit.warning;
        rec.parameters.assign(fit.state.w_mean.data(), fit.state.w_mean.data() + fit.state.w_mean.size());
        rec.parameters.push_back(fit.state.sigma());
        rec.parameter_names = PolynomialModel(data, model_id).report_names();
        return;
    }
    RngHandle rng(rec.seed);
    const VbGmmPrior prior = cfg.vb_gmm_prior ? *cfg.vb_gmm_prior : VbGmmPrior::defaults(data);
    const auto fit = vb_gmm_fit(data, model_id, prior, cfg.vb_gmm_options, rng);
    rec.wall_time = seconds_since(t0);
    rec.score = fit.bound;
    rec.warning = fit.warning;
    const MixtureParams p = fit.state.point_estimate();
    rec.parameters = p.means;
    rec.parameters.insert(rec.parameters.end(), p.sigmas.begin(), p.sigmas.end());
    rec.parameters.insert(rec.parameters.end(), p.weights.begin(), p.weights.end());
    std::vector<std::string> names;
    for (const char* prefix : {"mu", "sigma", "pi"}) {
        for (int s = 1; s <= model_id; ++s) names.push_back(prefix + std::to_string(s));
    }
    rec.parameter_names = std::move(names);
}

SweepReport sweep(const Dataset& data, Family family, std::span<const int> ids, Method method,
                  const HarnessConfig& cfg, std::uint64_t seed) {
    if (ids.empty()) {
        throw DomainError(family == Family::polynomial ? "order list must not be empty"
                                                       : "component list must not be empty");
    }
    cfg.validate();
    data.validate();
    SweepReport report;
    report.family = family;
    report.method = method;
    report.seed = seed;
    report.config_hash = config_hash(cfg, family, method);
    report.records.resize(ids.size());
    const auto n = static_cast<std::ptrdiff_t>(ids.size());
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto rec = fit_model(data, family, ids[static_cast<std::size_t>(i)], method, cfg, seed);
        report.records[static_cast<std::size_t>(i)] = std::move(rec);
    }
    report.argmax = SweepReport::compute_argmax(report.records);
    return report;
}

}  // namespace

std::string to_string(Method m) { return m == Method::vb ? "vb" : "ns"; }
std::string to_string(Family f) { return f == Family::polynomial ? "polynomial" : "gmm"; }

Method parse_method(const std::string& name) {
    if (name == "vb") return Method::vb;
    if (name == "ns") return Method::ns;
    throw DomainError("unknown method '" + name + "' (expected vb or ns)");
}

Family parse_family(const std::string& name) {
    if (name == "polynomial" || name == "poly") return Family::polynomial;
    if (name == "gmm") return Family::gmm;
    throw DomainError("unknown model family '" + name + "' (expected poly or gmm)");
}

void HarnessConfig::validate() const {
    // step sizes are per model; their length is checked when each model runs
    for (const NsConfig* c : {&ns_polynomial, &ns_gmm}) {
        c->validate(c->initial_step_sizes.empty() ? 1 : c->initial_step_sizes.size());
    }
    vb_linear_prior.validate();
    if (!(vb_linear_options.tol > 0.0) || vb_linear_options.max_iter < 1) {
        throw DomainError("invalid VB linear options");
    }
    if (vb_gmm_prior) vb_gmm_prior->validate();
    if (!(vb_gmm_options.tol > 0.0) || vb_gmm_options.max_iter < 1 || vb_gmm_options.restarts < 1) {
        throw DomainError("invalid VB mixture options");
    }
}

std::string HarnessConfig::canonical_text() const {
    std::ostringstream os;
    append_ns(os, "ns_polynomial", ns_polynomial);
    append_ns(os, "ns_gmm", ns_gmm);
    os << "vb_linear.a_w=" << format_double(vb_linear_prior.a_w) << '\n'
       << "vb_linear.a_gamma=" << format_double(vb_linear_prior.a_gamma) << '\n'
       << "vb_linear.b_gamma=" << format_double(vb_linear_prior.b_gamma) << '\n'
       << "vb_linear.tol=" << format_double(vb_linear_options.tol) << '\n'
       << "vb_linear.max_iter=" << vb_linear_options.max_iter << '\n'
       << "vb_linear.initial_gamma=" << format_double(vb_linear_options.initial_gamma) << '\n';
    if (vb_gmm_prior) {
        os << "vb_gmm.m0=" << format_double(vb_gmm_prior->m0) << '\n'
           << "vb_gmm.tau0=" << format_double(vb_gmm_prior->tau0) << '\n'
           << "vb_gmm.b0=" << format_double(vb_gmm_prior->b0) << '\n'
           << "vb_gmm.c0=" << format_double(vb_gmm_prior->c0) << '\n'
           << "vb_gmm.lambda0=" << format_double(vb_gmm_prior->lambda0) << '\n';
    } else {
        os << "vb_gmm.prior=data-default\n";
    }
    os << "vb_gmm.tol=" << format_double(vb_gmm_options.tol) << '\n'
       << "vb_gmm.max_iter=" << vb_gmm_options.max_iter << '\n'
       << "vb_gmm.restarts=" << vb_gmm_options.restarts << '\n';
    return os.str();
}

std::string hash_text(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const HarnessConfig& cfg, Family family, Method method) {
    return hash_text(cfg.canonical_text() + "family=" + to_string(family) + "\nmethod=" + to_string(method) + "\n");
}

int SweepReport::compute_argmax(const std::vector<SweepRecord>& records) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        if (!r.ok() || !std::isfinite(r.score)) continue;
        if (best < 0 || r.score > best_score || (r.score == best_score && r.model_id < best)) {
            best = r.model_id;
            best_score = r.score;
        }
    }
    return best;
}

const SweepRecord* SweepReport::best() const {
    for (const auto& r : records) {
        if (r.model_id == argmax && r.ok()) return &r;
    }
    return nullptr;
}

bool SweepReport::any_failed() const {
    for (const auto& r : records) {
        if (!r.ok()) return true;
    }
    return false;
}

void SweepReport::validate() const {
    if (compute_argmax(records) != argmax) {
        throw DomainError("sweep report argmax " + std::to_string(argmax) + " disagrees with stored scores");
    }
    for (const auto& r : records) {
        if (r.config_hash.empty()) throw DomainError("sweep record without config hash");
    }
}

std::uint64_t entry_seed(std::uint64_t seed, int model_id) {
    return mix_seed(seed, static_cast<std::uint64_t>(model_id));
}

SweepRecord fit_model(const Dataset& data, Family family, int model_id, Method method, const HarnessConfig& cfg,
                      std::uint64_t seed) {
    SweepRecord rec;
    rec.model_id = model_id;
    rec.method = method;
    rec.seed = entry_seed(seed, model_id);
    rec.config_hash = config_hash(cfg, family, method);
    try {
        if (model_id < 1) throw DomainError("model id must be at least 1");
        if (method == Method::ns) {
            fit_ns(rec, data, family, model_id, cfg);
        } else {
            fit_vb(rec, data, family, model_id, cfg);
        }
        rec.log_likelihood = plugin_log_likelihood(data, family, model_id, rec.parameters);
        rec.occam = rec.score - rec.log_likelihood;
    } catch (const std::exception& e) {
        rec.error = e.what();
        rec.score = std::numeric_limits<double>::quiet_NaN();
        rec.score_uncertainty = 0.0;
        rec.log_likelihood = std::numeric_limits<double>::quiet_NaN();
        rec.occam = std::numeric_limits<double>::quiet_NaN();
        rec.parameters.clear();
        rec.parameter_names.clear();
    }
    return rec;
}

SweepReport sweep_polynomial(const Dataset& data, std::span<const int> orders, Method method,
                             const HarnessConfig& cfg, std::uint64_t seed) {
    return sweep(data, Family::polynomial, orders, method, cfg, seed);
}

SweepReport sweep_gmm(const Dataset& data, std::span<const int> components, Method method,
                      const HarnessConfig& cfg, std::uint64_t seed) {
    return sweep(data, Family::gmm, components, method, cfg, seed);
}

double percentage_disagreement(double a, double b) {
    return 100.0 * std::abs(a - b) / std::max({std::abs(a), std::abs(b), 0.1});
}

ComparisonFailure::ComparisonFailure(const std::string& what, ComparisonReport partial)
    : std::runtime_error(what), partial_(std::move(partial)) {}

ComparisonReport compare_methods(const Dataset& data, Family family, int model_id, Method reference,
                                 Method other, const HarnessConfig& cfg, std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw DomainError("comparison needs at least one seed");
    cfg.validate();
    ComparisonReport report;
    report.family = family;
    report.model_id = model_id;
    report.reference_method = reference;
    report.other_method = other;
    report.seeds.assign(seeds.begin(), seeds.end());
    report.config_hash = hash_text(config_hash(cfg, family, reference) + config_hash(cfg, family, other));

    struct Averaged {
        ParameterVector mean;
        std::vector<std::string> names;
        double time = 0.0;
    };
    auto run = [&](Method method) {
        Averaged out;
        for (std::uint64_t seed : seeds) {
            const auto rec = fit_model(data, family, model_id, method, cfg, seed);
            if (!rec.ok()) {
                throw ComparisonFailure(to_string(method) + " fit failed: " + rec.error, report);
            }
            if (out.mean.empty()) {
                out.mean.assign(rec.parameters.size(), 0.0);
                out.names = rec.parameter_names;
            }
            for (std::size_t j = 0; j < rec.parameters.size(); ++j) out.mean[j] += rec.parameters[j];
            out.time += rec.wall_time;
        }
        const auto k = static_cast<double>(seeds.size());
        for (double& v : out.mean) v /= k;
        out.time /= k;
        return out;
    };
    const Averaged ref = run(reference);
    const Averaged oth = run(other);

    double total = 0.0;
    int counted = 0;
    for (std::size_t j = 0; j < ref.mean.size(); ++j) {
        ParameterComparison pc;
        pc.name = ref.names[j];
        pc.reference = ref.mean[j];
        pc.other = oth.mean[j];
        pc.disagreement = percentage_disagreement(pc.reference, pc.other);
        const bool coefficient = family == Family::gmm || j + 1 < ref.mean.size();
        pc.averaged = coefficient && std::abs(pc.reference) >= 0.1;
        if (pc.averaged) {
            total += pc.disagreement;
            ++counted;
        }
        report.parameters.push_back(pc);
    }
    report.averaged_disagreement = counted > 0 ? total / counted : 0.0;
    report.reference_time = ref.time;
    report.other_time = oth.time;
    const bool ns_over_vb = reference == Method::ns && other == Method::vb;
    const double num = ns_over_vb ? ref.time : oth.time;
    const double den = ns_over_vb ? oth.time : ref.time;
    report.timing_ratio = num / std::max(den, 1e-12);
    return report;
}

}  // namespace bayesev
