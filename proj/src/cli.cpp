#include "bayesev/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"

#include "bayesev/datagen.hpp"
#include "bayesev/harness.hpp"
#include "bayesev/report.hpp"

namespace bayesev {

namespace {

/// Thrown for flag values that parse but fail validation.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(trim(item));
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

int parse_int(const std::string& s) {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

struct NsFlags {
    int n_live;
    std::int64_t max_iterations = NsConfig{}.max_iterations;
    int steps = NsConfig{}.steps_per_replacement;
    double target_acceptance = NsConfig{}.target_acceptance;
    double stop_delta_logz = NsConfig{}.stop_delta_logz;
    double stop_info_factor = NsConfig{}.stop_info_factor;
    int retry_budget = NsConfig{}.retry_budget;

    NsConfig config() const {
        NsConfig c;
        c.n_live = n_live;
        c.max_iterations = max_iterations;
        c.steps_per_replacement = steps;
        c.target_acceptance = target_acceptance;
        c.stop_delta_logz = stop_delta_logz;
        c.stop_info_factor = stop_info_factor;
        c.retry_budget = retry_budget;
        return c;
    }
};

struct BackendFlags {
    Family family = Family::polynomial;
    NsFlags ns;
    VbLinearPrior linear_prior;
    VbLinearOptions linear_options;
    std::optional<double> m0;
    VbGmmPrior gmm_prior;
    VbGmmOptions gmm_options;
    double tol = 1e-6;
    int max_iter = 0;

    HarnessConfig config() const {
        HarnessConfig cfg;
        if (family == Family::polynomial) {
            cfg.ns_polynomial = ns.config();
            cfg.vb_linear_prior = linear_prior;
            cfg.vb_linear_options = linear_options;
            cfg.vb_linear_options.tol = tol;
            cfg.vb_linear_options.max_iter = max_iter;
        } else {
            cfg.ns_gmm = ns.config();
            if (m0) {
                VbGmmPrior p = gmm_prior;
                p.m0 = *m0;
                cfg.vb_gmm_prior = p;
            } else if (gmm_prior.tau0 != VbGmmPrior{}.tau0 || gmm_prior.b0 != VbGmmPrior{}.b0 ||
                       gmm_prior.c0 != VbGmmPrior{}.c0 || gmm_prior.lambda0 != VbGmmPrior{}.lambda0) {
                // data-mean m0 is filled in once the dataset is loaded
                cfg.vb_gmm_prior = gmm_prior;
            }
            cfg.vb_gmm_options = gmm_options;
            cfg.vb_gmm_options.tol = tol;
            cfg.vb_gmm_options.max_iter = max_iter;
        }
        return cfg;
    }
};

void add_backend_flags(CLI::App* app, BackendFlags& f, Family family) {
    f.family = family;
    const bool poly = family == Family::polynomial;
    f.ns.n_live = poly ? NsConfig::polynomial_defaults().n_live : NsConfig::mixture_defaults().n_live;
    f.max_iter = poly ? VbLinearOptions{}.max_iter : VbGmmOptions{}.max_iter;

    app->add_option("--n-live", f.ns.n_live, "nested sampling: live points")->capture_default_str()->group("Nested sampling");
    app->add_option("--max-iterations", f.ns.max_iterations, "nested sampling: iteration cap")
        ->capture_default_str()->group("Nested sampling");
    app->add_option("--steps-per-replacement", f.ns.steps, "nested sampling: random-walk steps per replacement")
        ->capture_default_str()->group("Nested sampling");
    app->add_option("--target-acceptance", f.ns.target_acceptance, "nested sampling: step-size adaptation target")
        ->capture_default_str()->group("Nested sampling");
    app->add_option("--stop-delta-logz", f.ns.stop_delta_logz, "nested sampling: evidence increment threshold")
        ->capture_default_str()->group("Nested sampling");
    app->add_option("--stop-info-factor", f.ns.stop_info_factor,
                    "nested sampling: require iterations > factor * n_live * H")
        ->capture_default_str()->group("Nested sampling");
    app->add_option("--retry-budget", f.ns.retry_budget, "nested sampling: walk restarts before failing")
        ->capture_default_str()->group("Nested sampling");

    app->add_option("--tol", f.tol, "variational: bound change tolerance")->capture_default_str()->group("Variational");
    app->add_option("--max-iter", f.max_iter, "variational: iteration cap")->capture_default_str()->group("Variational");
    if (poly) {
        app->add_option("--a-w", f.linear_prior.a_w, "variational: weight prior precision")
            ->capture_default_str()->group("Variational");
        app->add_option("--a-gamma", f.linear_prior.a_gamma, "variational: noise precision prior rate")
            ->capture_default_str()->group("Variational");
        app->add_option("--b-gamma", f.linear_prior.b_gamma, "variational: noise precision prior shape")
            ->capture_default_str()->group("Variational");
    } else {
        app->add_option("--m0", f.m0, "variational: prior mean of component means [default: data mean]")
            ->group("Variational");
        app->add_option("--tau0", f.gmm_prior.tau0, "variational: prior precision of component means")
            ->capture_default_str()->group("Variational");
        app->add_option("--b0", f.gmm_prior.b0, "variational: component precision prior rate")
            ->capture_default_str()->group("Variational");
        app->add_option("--c0", f.gmm_prior.c0, "variational: component precision prior shape")
            ->capture_default_str()->group("Variational");
        app->add_option("--lambda0", f.gmm_prior.lambda0, "variational: Dirichlet concentration")
            ->capture_default_str()->group("Variational");
        app->add_option("--restarts", f.gmm_options.restarts, "variational: random restarts per component count")
            ->capture_default_str()->group("Variational");
    }
}

std::filesystem::path default_out_root() {
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
    return "runs";
}

/// Config echo: the seed plus every option of the selected subcommand.
std::string config_echo(const CLI::App* app, const std::string& command) {
    const CLI::App* leaf = app;
    while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();
    return "# " + command + "\nseed=" + app->get_option("--seed")->as<std::string>() + "\n" +
           leaf->config_to_str(true, false);
}

std::filesystem::path start_run(const std::filesystem::path& root, const CLI::App* app, const std::string& command,
                                std::ostream& out) {
    const std::string echo = config_echo(app, command);
    const auto dir = make_run_dir(root, command, hash_text(echo));
    std::ofstream(dir / "config.toml", std::ios::binary) << echo;
    out << "run directory: " << dir.string() << '\n';
    return dir;
}

void print_sweep(const SweepReport& report, std::ostream& out) {
    out << "model\tscore\tuncertainty\tlog_likelihood\toccam\twall_time\tstatus\n";
    for (const auto& r : report.records) {
        out << r.model_id << '\t';
        if (r.ok()) {
            out << fmt(r.score) << '\t' << fmt(r.score_uncertainty) << '\t' << fmt(r.log_likelihood) << '\t'
                << fmt(r.occam) << '\t' << fmt(r.wall_time, 3) << '\t' << (r.warning.empty() ? "ok" : r.warning);
        } else {
            out << "-\t-\t-\t-\t" << fmt(r.wall_time, 3) << "\terror: " << r.error;
        }
        out << '\n';
    }
    if (const auto* best = report.best()) {
        out << "best: " << best->model_id << " score: " << fmt(best->score) << '\n';
    } else {
        out << "best: none\n";
    }
}

void print_comparison(const ComparisonReport& report, std::ostream& out) {
    out << "parameter\t" << to_string(report.reference_method) << '\t' << to_string(report.other_method)
        << "\tdisagreement_pct\taveraged\n";
    for (const auto& p : report.parameters) {
        out << p.name << '\t' << fmt(p.reference, 6) << '\t' << fmt(p.other, 6) << '\t' << fmt(p.disagreement, 3)
            << '\t' << (p.averaged ? "yes" : "no") << '\n';
    }
    out << "averaged disagreement: " << fmt(report.averaged_disagreement, 3) << "%\n";
    out << "mean wall time: " << to_string(report.reference_method) << ' ' << fmt(report.reference_time, 3) << " s, "
        << to_string(report.other_method) << ' ' << fmt(report.other_time, 3) << " s\n";
    out << "timing ratio: " << fmt(report.timing_ratio, 2) << '\n';
}

struct GenerateFlags {
    std::string coeffs = "0,0,0,0,0,1";
    std::string interval = "-2,2";
    std::string means, sigmas, weights;
    int n = 0;
    double sigma = 2.0;
    std::string output;
};

struct SweepFlags {
    std::string data;
    std::string ids;
    std::string method;
    BackendFlags backend;
};

struct CompareFlags {
    std::string data;
    int model = 0;
    std::vector<std::string> methods;
    int repeats = 1;
    BackendFlags backend;
};

HarnessConfig prepare_config(const BackendFlags& flags, const Dataset& data) {
    HarnessConfig cfg = flags.config();
    if (cfg.vb_gmm_prior && !flags.m0) {
        cfg.vb_gmm_prior->m0 = VbGmmPrior::defaults(data).m0;
    }
    return cfg;
}

void validate_config(const BackendFlags& flags) {
    try {
        flags.config().validate();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

Dataset load_data(const std::string& path, Family family) {
    Dataset data = read_dataset(path);
    if (family == Family::polynomial && !data.has_abscissae()) {
        throw std::runtime_error(path + ": polynomial fits need two columns (x, y)");
    }
    return data;
}

}  // namespace

std::vector<int> parse_id_list(const std::string& text) {
    std::vector<int> out;
    if (trim(text).empty()) throw std::invalid_argument("empty list");
    for (const auto& part : split(text, ',')) {
        if (part.empty()) throw std::invalid_argument("empty entry in '" + text + "'");
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_int(part));
            continue;
        }
        const int lo = parse_int(trim(part.substr(0, dots)));
        const int hi = parse_int(trim(part.substr(dots + 2)));
        if (hi < lo) throw std::invalid_argument("descending range '" + part + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
    }
    for (int v : out) {
        if (v < 1) throw std::invalid_argument("model ids start at 1, got " + std::to_string(v));
    }
    return out;
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    if (trim(text).empty()) throw std::invalid_argument("empty list");
    for (const auto& part : split(text, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(part, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("not a number: '" + part + "'");
        }
        if (used != part.size() || !std::isfinite(v)) throw std::invalid_argument("not a number: '" + part + "'");
        out.push_back(v);
    }
    return out;
}

std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& command,
                                   const std::string& hash) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
    std::filesystem::create_directories(root);
    const std::string base = command + "-" + stamp + "-" + hash.substr(0, 8);
    for (int suffix = 1;; ++suffix) {
        const auto dir = root / (suffix == 1 ? base : base + "-" + std::to_string(suffix));
        if (std::filesystem::create_directory(dir)) return dir;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian model selection with nested sampling and variational Bayes", "bayesev"};
    app.require_subcommand(1);
    // global flags may follow the subcommand path
    app.fallthrough();
    std::uint64_t seed = 1;
    std::string out_root = default_out_root().string();
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--out", out_root, std::string("output root directory [env ") + kOutDirEnv + "]")
        ->capture_default_str();

    auto* generate = app.add_subcommand("generate", "generate a synthetic dataset")->require_subcommand(1);
    GenerateFlags gen_poly;
    auto* gen_poly_cmd = generate->add_subcommand("poly", "polynomial curve plus Gaussian noise");
    gen_poly_cmd->add_option("--coeffs", gen_poly.coeffs, "coefficients, constant term first")->capture_default_str();
    gen_poly_cmd->add_option("--interval", gen_poly.interval, "abscissa range lo,hi")->capture_default_str();
    gen_poly.n = 40;
    gen_poly_cmd->add_option("--n", gen_poly.n, "number of points")->capture_default_str();
    gen_poly_cmd->add_option("--sigma", gen_poly.sigma, "noise standard deviation")->capture_default_str();
    gen_poly_cmd->add_option("--output", gen_poly.output, "dataset path [default: <run dir>/dataset.tsv]");

    GenerateFlags gen_gmm;
    auto* gen_gmm_cmd = generate->add_subcommand("gmm", "samples from a one-dimensional Gaussian mixture");
    gen_gmm_cmd->add_option("--means", gen_gmm.means, "component means")->required();
    gen_gmm_cmd->add_option("--sigmas", gen_gmm.sigmas, "component standard deviations")->required();
    gen_gmm_cmd->add_option("--weights", gen_gmm.weights, "mixing weights")->required();
    gen_gmm.n = 300;
    gen_gmm_cmd->add_option("--n", gen_gmm.n, "number of points")->capture_default_str();
    gen_gmm_cmd->add_option("--output", gen_gmm.output, "dataset path [default: <run dir>/dataset.tsv]");

    auto* sweep = app.add_subcommand("sweep", "score a range of models on one dataset")->require_subcommand(1);
    SweepFlags sweep_poly;
    auto* sweep_poly_cmd = sweep->add_subcommand("poly", "polynomial orders");
    sweep_poly_cmd->add_option("--data", sweep_poly.data, "dataset file")->required();
    sweep_poly_cmd->add_option("--orders", sweep_poly.ids, "orders, e.g. 1..10")->required();
    sweep_poly_cmd->add_option("--method", sweep_poly.method, "vb or ns")->required()->check(CLI::IsMember({"vb", "ns"}));
    add_backend_flags(sweep_poly_cmd, sweep_poly.backend, Family::polynomial);

    SweepFlags sweep_gmm_flags;
    auto* sweep_gmm_cmd = sweep->add_subcommand("gmm", "mixture component counts");
    sweep_gmm_cmd->add_option("--data", sweep_gmm_flags.data, "dataset file")->required();
    sweep_gmm_cmd->add_option("--components", sweep_gmm_flags.ids, "component counts, e.g. 1..6")->required();
    sweep_gmm_cmd->add_option("--method", sweep_gmm_flags.method, "vb or ns")
        ->required()->check(CLI::IsMember({"vb", "ns"}));
    add_backend_flags(sweep_gmm_cmd, sweep_gmm_flags.backend, Family::gmm);

    auto* compare = app.add_subcommand("compare", "compare two methods at one model")->require_subcommand(1);
    CompareFlags cmp_poly;
    auto* cmp_poly_cmd = compare->add_subcommand("poly", "polynomial model");
    cmp_poly_cmd->add_option("--data", cmp_poly.data, "dataset file")->required();
    cmp_poly_cmd->add_option("--order", cmp_poly.model, "polynomial order")->required();
    CompareFlags cmp_gmm;
    auto* cmp_gmm_cmd = compare->add_subcommand("gmm", "mixture model");
    cmp_gmm_cmd->add_option("--data", cmp_gmm.data, "dataset file")->required();
    cmp_gmm_cmd->add_option("--components", cmp_gmm.model, "component count")->required();
    for (auto [cmd, flags, family] : {std::tuple{cmp_poly_cmd, &cmp_poly, Family::polynomial},
                                      std::tuple{cmp_gmm_cmd, &cmp_gmm, Family::gmm}}) {
        flags->methods = {"vb", "ns"};
        cmd->add_option("--method", flags->methods, "reference then other method (give twice)")
            ->expected(2)->take_all()->capture_default_str()->check(CLI::IsMember({"vb", "ns"}));
        cmd->add_option("--repeats", flags->repeats, "runs per method, seeds seed..seed+repeats-1")
            ->capture_default_str()->check(CLI::PositiveNumber);
        add_backend_flags(cmd, flags->backend, family);
    }

    const std::string globals = "Global options (accepted anywhere on the line):\n  --seed UINT [" + std::to_string(seed) +
                                "]\n  --out DIR [" + out_root + "]  (default from " + kOutDirEnv + ")";
    for (auto* group : {generate, sweep, compare}) {
        group->footer(globals);
        for (auto* leaf : group->get_subcommands({})) leaf->footer(globals);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help at any level; help() descends into the selected subcommand
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        err << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        if (generate->parsed()) {
            const bool poly = gen_poly_cmd->parsed();
            const GenerateFlags& g = poly ? gen_poly : gen_gmm;
            Dataset data;
            try {
                if (poly) {
                    PolyGenSpec spec;
                    spec.coefficients = parse_real_list(g.coeffs);
                    const auto iv = parse_real_list(g.interval);
                    if (iv.size() != 2) throw std::invalid_argument("--interval needs exactly two values");
                    spec.interval_lo = iv[0];
                    spec.interval_hi = iv[1];
                    spec.n_points = g.n;
                    spec.noise_sigma = g.sigma;
                    spec.seed = seed;
                    spec.validate();
                    data = generate_polynomial(spec);
                } else {
                    GmmGenSpec spec;
                    spec.means = parse_real_list(g.means);
                    spec.sigmas = parse_real_list(g.sigmas);
                    spec.weights = parse_real_list(g.weights);
                    spec.n_points = g.n;
                    spec.seed = seed;
                    spec.validate();
                    data = generate_gmm(spec);
                }
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            } catch (const DomainError& e) {
                throw UsageError(e.what());
            }
            const auto* leaf = poly ? gen_poly_cmd : gen_gmm_cmd;
            std::filesystem::path path = g.output;
            if (path.empty()) {
                path = start_run(out_root, &app, std::string("generate-") + leaf->get_name(), out) / "dataset.tsv";
            }
            write_dataset(data, path);
            const auto& y = data.ordinates;
            const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
            double var = 0.0;
            for (double v : y) var += (v - mean) * (v - mean);
            var /= static_cast<double>(y.size());
            out << "wrote " << path.string() << '\n';
            out << "points: " << data.count() << " mean: " << fmt(mean) << " sd: " << fmt(std::sqrt(var))
                << " min: " << fmt(*std::min_element(y.begin(), y.end()))
                << " max: " << fmt(*std::max_element(y.begin(), y.end())) << '\n';
            return kExitOk;
        }

        if (sweep->parsed()) {
            const bool poly = sweep_poly_cmd->parsed();
            const SweepFlags& s = poly ? sweep_poly : sweep_gmm_flags;
            const Family family = poly ? Family::polynomial : Family::gmm;
            std::vector<int> ids;
            try {
                ids = parse_id_list(s.ids);
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string(poly ? "--orders" : "--components") + ": " + e.what());
            }
            validate_config(s.backend);
            const Dataset data = load_data(s.data, family);
            const HarnessConfig cfg = prepare_config(s.backend, data);
            const Method method = parse_method(s.method);
            const auto dir = start_run(out_root, &app, std::string("sweep-") + (poly ? "poly" : "gmm"), out);
            const SweepReport report = poly ? sweep_polynomial(data, ids, method, cfg, seed)
                                            : sweep_gmm(data, ids, method, cfg, seed);
            write_report(report, dir / "report.yaml");
            write_plot_data(report, dir / "scores.tsv");
            print_sweep(report, out);
            if (report.any_failed()) {
                err << "error: some models failed; see " << (dir / "report.yaml").string() << '\n';
                return kExitFailure;
            }
            return kExitOk;
        }

        if (compare->parsed()) {
            const bool poly = cmp_poly_cmd->parsed();
            const CompareFlags& c = poly ? cmp_poly : cmp_gmm;
            const Family family = poly ? Family::polynomial : Family::gmm;
            if (c.model < 1) throw UsageError(std::string(poly ? "--order" : "--components") + " must be at least 1");
            validate_config(c.backend);
            const Dataset data = load_data(c.data, family);
            const HarnessConfig cfg = prepare_config(c.backend, data);
            std::vector<std::uint64_t> seeds;
            for (int i = 0; i < c.repeats; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
            const auto dir = start_run(out_root, &app, std::string("compare-") + (poly ? "poly" : "gmm"), out);
            try {
                const auto report = compare_methods(data, family, c.model, parse_method(c.methods[0]),
                                                    parse_method(c.methods[1]), cfg, seeds);
                write_report(report, dir / "report.yaml");
                print_comparison(report, out);
            } catch (const ComparisonFailure& e) {
                write_report(e.partial(), dir / "report.yaml");
                throw;
            }
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace bayesev
