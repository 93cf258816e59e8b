#include "bayesev/report.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "bayesev/datagen.hpp"

namespace bayesev {

namespace {

std::string number(double v) {
    if (std::isnan(v)) return ".nan";
    if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
    return format_double(v);
}

double parse_number(const std::string& text, const std::string& where) {
    if (text == ".nan" || text == ".NaN" || text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == ".inf" || text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-.inf" || text == "-inf") return -std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        throw ReportFormatError(where + ": not a number: '" + text + "'");
    }
    return v;
}

YAML::Node require(const YAML::Node& node, const char* key, const std::string& where) {
    const YAML::Node child = node[key];
    if (!child) throw ReportFormatError(where + ": missing key '" + key + "'");
    return child;
}

template <class T>
T scalar(const YAML::Node& node, const char* key, const std::string& where) {
    try {
        return require(node, key, where).as<T>();
    } catch (const YAML::Exception& e) {
        throw ReportFormatError(where + ": bad value for '" + key + "': " + e.what());
    }
}

double real(const YAML::Node& node, const char* key, const std::string& where) {
    return parse_number(scalar<std::string>(node, key, where), where + "." + key);
}

std::vector<double> reals(const YAML::Node& node, const char* key, const std::string& where) {
    std::vector<double> out;
    for (const auto& item : require(node, key, where)) out.push_back(parse_number(item.as<std::string>(), where));
    return out;
}

void emit_reals(YAML::Emitter& out, const char* key, const std::vector<double>& values) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double v : values) out << number(v);
    out << YAML::EndSeq;
}

void emit_header(YAML::Emitter& out, const char* kind) {
    out << YAML::Key << "schema" << YAML::Value << kReportSchema;
    out << YAML::Key << "kind" << YAML::Value << kind;
}

std::string finish(YAML::Emitter& out) {
    out << YAML::EndMap;
    if (!out.good()) throw ReportFormatError("report serialization failed: " + out.GetLastError());
    return std::string(out.c_str()) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

YAML::Node load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open report " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    YAML::Node root;
    try {
        root = YAML::Load(buf.str());
    } catch (const YAML::Exception& e) {
        throw ReportFormatError(path.string() + ": " + e.what());
    }
    if (!root.IsMap()) throw ReportFormatError(path.string() + ": report is not a mapping");
    const int schema = scalar<int>(root, "schema", path.string());
    if (schema != kReportSchema) {
        throw ReportVersionError(path.string() + ": unsupported report schema version " + std::to_string(schema) +
                                 " (expected " + std::to_string(kReportSchema) + ")");
    }
    return root;
}

/// key -> value lines from the timing sidecar; empty when absent.
std::vector<std::pair<std::string, double>> load_timing(const std::filesystem::path& report_path) {
    std::vector<std::pair<std::string, double>> out;
    std::ifstream f(timing_path(report_path));
    if (!f) return out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ReportFormatError(timing_path(report_path).string() + ": bad line");
        out.emplace_back(line.substr(0, tab), parse_number(line.substr(tab + 1), timing_path(report_path).string()));
    }
    return out;
}

SweepReport parse_sweep(const YAML::Node& root, const std::filesystem::path& path) {
    const std::string where = path.string();
    SweepReport r;
    r.family = parse_family(scalar<std::string>(root, "family", where));
    r.method = parse_method(scalar<std::string>(root, "method", where));
    r.seed = scalar<std::uint64_t>(root, "seed", where);
    r.config_hash = scalar<std::string>(root, "config_hash", where);
    r.argmax = scalar<int>(root, "argmax", where);
    for (const auto& node : require(root, "records", where)) {
        SweepRecord rec;
        rec.model_id = scalar<int>(node, "model_id", where);
        const std::string at = where + ": record " + std::to_string(rec.model_id);
        rec.method = r.method;
        rec.score = real(node, "score", at);
        rec.score_uncertainty = real(node, "score_uncertainty", at);
        rec.log_likelihood = real(node, "log_likelihood", at);
        rec.occam = real(node, "occam", at);
        for (const auto& n : require(node, "parameter_names", at)) rec.parameter_names.push_back(n.as<std::string>());
        rec.parameters = reals(node, "parameters", at);
        rec.seed = scalar<std::uint64_t>(node, "seed", at);
        rec.config_hash = scalar<std::string>(node, "config_hash", at);
        rec.warning = scalar<std::string>(node, "warning", at);
        rec.error = scalar<std::string>(node, "error", at);
        r.records.push_back(std::move(rec));
    }
    for (const auto& [key, value] : load_timing(path)) {
        for (auto& rec : r.records) {
            if (std::to_string(rec.model_id) == key) rec.wall_time = value;
        }
    }
    return r;
}

ComparisonReport parse_comparison(const YAML::Node& root, const std::filesystem::path& path) {
    const std::string where = path.string();
    ComparisonReport r;
    r.family = parse_family(scalar<std::string>(root, "family", where));
    r.model_id = scalar<int>(root, "model_id", where);
    r.reference_method = parse_method(scalar<std::string>(root, "reference_method", where));
    r.other_method = parse_method(scalar<std::string>(root, "other_method", where));
    for (const auto& s : require(root, "seeds", where)) r.seeds.push_back(s.as<std::uint64_t>());
    r.config_hash = scalar<std::string>(root, "config_hash", where);
    r.averaged_disagreement = real(root, "averaged_disagreement", where);
    for (const auto& node : require(root, "parameters", where)) {
        ParameterComparison pc;
        pc.name = scalar<std::string>(node, "name", where);
        pc.reference = real(node, "reference", where);
        pc.other = real(node, "other", where);
        pc.disagreement = real(node, "disagreement", where);
        pc.averaged = scalar<bool>(node, "averaged", where);
        r.parameters.push_back(std::move(pc));
    }
    for (const auto& [key, value] : load_timing(path)) {
        if (key == "reference") r.reference_time = value;
        if (key == "other") r.other_time = value;
        if (key == "timing_ratio") r.timing_ratio = value;
    }
    return r;
}

}  // namespace

std::string serialize_report(const SweepReport& report) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    emit_header(out, "sweep");
    out << YAML::Key << "family" << YAML::Value << to_string(report.family);
    out << YAML::Key << "method" << YAML::Value << to_string(report.method);
    out << YAML::Key << "seed" << YAML::Value << report.seed;
    out << YAML::Key << "config_hash" << YAML::Value << YAML::DoubleQuoted << report.config_hash;
    out << YAML::Key << "argmax" << YAML::Value << report.argmax;
    out << YAML::Key << "records" << YAML::Value << YAML::BeginSeq;
    for (const auto& rec : report.records) {
        out << YAML::BeginMap;
        out << YAML::Key << "model_id" << YAML::Value << rec.model_id;
        out << YAML::Key << "score" << YAML::Value << number(rec.score);
        out << YAML::Key << "score_uncertainty" << YAML::Value << number(rec.score_uncertainty);
        out << YAML::Key << "log_likelihood" << YAML::Value << number(rec.log_likelihood);
        out << YAML::Key << "occam" << YAML::Value << number(rec.occam);
        out << YAML::Key << "parameter_names" << YAML::Value << YAML::Flow << rec.parameter_names;
        emit_reals(out, "parameters", rec.parameters);
        out << YAML::Key << "seed" << YAML::Value << rec.seed;
        out << YAML::Key << "config_hash" << YAML::Value << YAML::DoubleQuoted << rec.config_hash;
        out << YAML::Key << "warning" << YAML::Value << YAML::DoubleQuoted << rec.warning;
        out << YAML::Key << "error" << YAML::Value << YAML::DoubleQuoted << rec.error;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    return finish(out);
}

std::string serialize_report(const ComparisonReport& report) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    emit_header(out, "comparison");
    out << YAML::Key << "family" << YAML::Value << to_string(report.family);
    out << YAML::Key << "model_id" << YAML::Value << report.model_id;
    out << YAML::Key << "reference_method" << YAML::Value << to_string(report.reference_method);
    out << YAML::Key << "other_method" << YAML::Value << to_string(report.other_method);
    out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << report.seeds;
    out << YAML::Key << "config_hash" << YAML::Value << YAML::DoubleQuoted << report.config_hash;
    out << YAML::Key << "averaged_disagreement" << YAML::Value << number(report.averaged_disagreement);
    out << YAML::Key << "parameters" << YAML::Value << YAML::BeginSeq;
    for (const auto& pc : report.parameters) {
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << pc.name;
        out << YAML::Key << "reference" << YAML::Value << number(pc.reference);
        out << YAML::Key << "other" << YAML::Value << number(pc.other);
        out << YAML::Key << "disagreement" << YAML::Value << number(pc.disagreement);
        out << YAML::Key << "averaged" << YAML::Value << pc.averaged;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    return finish(out);
}

std::filesystem::path timing_path(const std::filesystem::path& report_path) {
    return std::filesystem::path(report_path.string() + ".timing.tsv");
}

void write_report(const SweepReport& report, const std::filesystem::path& path) {
    write_text(path, serialize_report(report));
    std::string timing = "# model_id\twall_time\n";
    for (const auto& rec : report.records) {
        timing += std::to_string(rec.model_id) + "\t" + number(rec.wall_time) + "\n";
    }
    write_text(timing_path(path), timing);
}

void write_report(const ComparisonReport& report, const std::filesystem::path& path) {
    write_text(path, serialize_report(report));
    write_text(timing_path(path), "# key\tvalue\nreference\t" + number(report.reference_time) + "\nother\t" +
                                      number(report.other_time) + "\ntiming_ratio\t" +
                                      number(report.timing_ratio) + "\n");
}

Report read_report(const std::filesystem::path& path) {
    const YAML::Node root = load(path);
    const auto kind = scalar<std::string>(root, "kind", path.string());
    if (kind == "sweep") return parse_sweep(root, path);
    if (kind == "comparison") return parse_comparison(root, path);
    throw ReportFormatError(path.string() + ": unknown report kind '" + kind + "'");
}

SweepReport read_sweep_report(const std::filesystem::path& path) {
    auto r = read_report(path);
    if (auto* s = std::get_if<SweepReport>(&r)) return std::move(*s);
    throw ReportFormatError(path.string() + ": not a sweep report");
}

ComparisonReport read_comparison_report(const std::filesystem::path& path) {
    auto r = read_report(path);
    if (auto* c = std::get_if<ComparisonReport>(&r)) return std::move(*c);
    throw ReportFormatError(path.string() + ": not a comparison report");
}

void write_plot_data(const SweepReport& report, const std::filesystem::path& path) {
    std::string text = "# model_id\tscore\n";
    for (const auto& rec : report.records) {
        if (rec.ok()) text += std::to_string(rec.model_id) + "\t" + number(rec.score) + "\n";
    }
    write_text(path, text);
}

}  // namespace bayesev
