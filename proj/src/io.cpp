#include "modmon/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "modmon/errors.hpp"
#include "modmon/names.hpp"

namespace modmon {

namespace {

using nlohmann::json;

void rename_into_place(const std::string& tmp, const std::string& path) {
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move " + tmp + " to " + path + ": " + ec.message());
    }
}

std::string location(const std::string& path, int line) {
    return path + ":" + std::to_string(line);
}

json parse_json_line(const std::string& text, const std::string& path, int line) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(location(path, line) + ": " + e.what());
    }
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + ": missing or mistyped field '" + std::string(key) + "'");
    }
}

json weights_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index expected_rows,
                                 Eigen::Index expected_cols, const std::string& where) {
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != expected_rows) {
        throw ParseError(where + ": expected " + std::to_string(expected_rows) + " rows");
    }
    Eigen::MatrixXd m(expected_rows, expected_cols);
    for (Eigen::Index i = 0; i < expected_rows; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != expected_cols) {
            throw ParseError(where + ": row " + std::to_string(i) + " expected " +
                             std::to_string(expected_cols) + " columns");
        }
        for (Eigen::Index j = 0; j < expected_cols; ++j) {
            const json& cell = row[static_cast<std::size_t>(j)];
            if (!cell.is_number()) {
                throw ParseError(where + ": non-numeric entry at (" + std::to_string(i) +
                                 ", " + std::to_string(j) + ")");
            }
            m(i, j) = cell.get<double>();
        }
    }
    return m;
}

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed: " + tmp);
    }
    rename_into_place(tmp, path);
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc()) throw NumericError("cannot format double");
    return std::string(buf, res.ptr);
}

void write_network(const DynamicNetwork& network, const std::string& path,
                   const nlohmann::json& metadata) {
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");

        json header;
        header["format"] = "modmon.network";
        header["version"] = 1;
        header["attribute_dim"] = network.attribute_dim();
        header["snapshot_count"] = network.size();
        if (network.changepoint()) {
            header["changepoint"] = *network.changepoint();
        } else {
            header["changepoint"] = nullptr;
        }
        header["metadata"] = metadata;
        out << header.dump() << '\n';

        for (const auto& snap : network.snapshots()) {
            const Eigen::MatrixXd& a = snap.adjacency();
            json edges = json::array();
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                for (Eigen::Index j = i; j < a.cols(); ++j) {
                    if (a(i, j) != 0.0) {
                        edges.push_back(json::array(
                            {static_cast<int>(i), static_cast<int>(j), a(i, j)}));
                    }
                }
            }
            json attrs = json::array();
            const Eigen::MatrixXd& x = snap.attributes();
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                json row = json::array();
                for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
                attrs.push_back(std::move(row));
            }
            json line;
            line["t"] = snap.t();
            line["n"] = snap.node_count();
            line["edges"] = std::move(edges);
            line["attributes"] = std::move(attrs);
            if (snap.labels()) {
                line["labels"] = *snap.labels();
            } else {
                line["labels"] = nullptr;
            }
            out << line.dump() << '\n';
        }
        out.flush();
        if (!out) throw IoError("write failed: " + tmp);
    }
    rename_into_place(tmp, path);
}

DynamicNetwork read_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    ++lineno;

    const json header = parse_json_line(line, path, lineno);
    const std::string where = location(path, lineno);
    if (field<std::string>(header, "format", where) != "modmon.network") {
        throw ParseError(where + ": not a network file");
    }
    const int version = field<int>(header, "version", where);
    if (version != 1) {
        throw VersionMismatchError(where + ": unsupported network version " +
                                   std::to_string(version));
    }
    const int attribute_dim = field<int>(header, "attribute_dim", where);
    const int count = field<int>(header, "snapshot_count", where);
    if (attribute_dim < 1 || count < 1) {
        throw ParseError(where + ": attribute_dim and snapshot_count must be >= 1");
    }
    std::optional<int> changepoint;
    if (!header.contains("changepoint")) {
        throw ParseError(where + ": missing field 'changepoint'");
    }
    if (!header.at("changepoint").is_null()) {
        changepoint = field<int>(header, "changepoint", where);
    }

    std::vector<AttributedSnapshot> snapshots;
    snapshots.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        if (!std::getline(in, line)) {
            throw ParseError(path + ": unexpected end of file, expected " +
                             std::to_string(count) + " snapshot lines");
        }
        ++lineno;
        const std::string snap_where = location(path, lineno);
        const json j = parse_json_line(line, path, lineno);

        const int t = field<int>(j, "t", snap_where);
        const int n = field<int>(j, "n", snap_where);
        if (n < 1) throw ParseError(snap_where + ": n must be >= 1");

        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        if (!j.contains("edges") || !j.at("edges").is_array()) {
            throw ParseError(snap_where + ": missing or mistyped field 'edges'");
        }
        for (const json& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
                !e[1].is_number_integer() || !e[2].is_number()) {
                throw ParseError(snap_where + ": edges must be [u, v, weight] triples");
            }
            const int u = e[0].get<int>();
            const int v = e[1].get<int>();
            const double w = e[2].get<double>();
            if (u < 0 || v < 0 || u >= n || v >= n || u > v) {
                throw ParseError(snap_where + ": edge endpoints must satisfy 0 <= u <= v < n");
            }
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw ParseError(snap_where + ": edge weights must be finite and >= 0");
            }
            a(u, v) = w;
            a(v, u) = w;
        }

        if (!j.contains("attributes")) {
            throw ParseError(snap_where + ": missing field 'attributes'");
        }
        Eigen::MatrixXd x =
            matrix_from_json(j.at("attributes"), n, attribute_dim,
                             snap_where + ": attributes");

        std::optional<std::vector<int>> labels;
        if (j.contains("labels") && !j.at("labels").is_null()) {
            labels = field<std::vector<int>>(j, "labels", snap_where);
        }
        try {
            snapshots.emplace_back(t, std::move(a), std::move(x), std::move(labels));
        } catch (const Error& e) {
            throw ParseError(snap_where + ": " + e.what());
        }
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty()) {
            throw ParseError(location(path, lineno) + ": trailing content after snapshots");
        }
    }
    try {
        return DynamicNetwork(std::move(snapshots), attribute_dim, changepoint);
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_attribute_matrix(const Eigen::MatrixXd& attributes, const std::string& path) {
    std::ostringstream out;
    out << "modmon.attributes 1\n";
    out << attributes.rows() << ' ' << attributes.cols() << '\n';
    for (Eigen::Index i = 0; i < attributes.rows(); ++i) {
        for (Eigen::Index j = 0; j < attributes.cols(); ++j) {
            if (j > 0) out << ' ';
            out << format_double(attributes(i, j));
        }
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

Eigen::MatrixXd load_attribute_matrix(const std::string& path, Eigen::Index expected_rows,
                                      Eigen::Index expected_cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "modmon.attributes") {
        throw ParseError(path + ": not an attribute matrix file");
    }
    if (version != 1) {
        throw VersionMismatchError(path + ": unsupported attribute version " +
                                   std::to_string(version));
    }
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> rows >> cols)) throw ParseError(path + ": missing dimension line");
    if (rows != expected_rows || cols != expected_cols) {
        throw DimensionMismatchError(path + ": expected " + std::to_string(expected_rows) +
                                     " x " + std::to_string(expected_cols) + ", file has " +
                                     std::to_string(rows) + " x " + std::to_string(cols));
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(in >> m(i, j))) {
                throw ParseError(path + ": truncated at entry (" + std::to_string(i) +
                                 ", " + std::to_string(j) + ")");
            }
        }
    }
    return m;
}

void write_checkpoint(const DmonModel& model, const TrainConfig& train,
                      const std::string& path) {
    json j;
    j["format"] = "modmon.checkpoint";
    j["version"] = 1;
    j["model"]["attribute_dim"] = model.attribute_dim();
    j["model"]["hidden_dim"] = model.hidden_dim();
    j["model"]["communities"] = model.communities();
    j["model"]["activation"] = "selu";
    j["model"]["weights"]["w_conv"] = weights_to_json(model.w_conv());
    j["model"]["weights"]["w_skip"] = weights_to_json(model.w_skip());
    j["model"]["weights"]["w_out"] = weights_to_json(model.w_out());
    j["train"]["learning_rate"] = train.learning_rate;
    j["train"]["epochs"] = train.epochs;
    j["train"]["regularizer"] = regularizer_name(train.regularizer);
    j["train"]["reg_weight"] = train.reg_weight;
    j["train"]["seed"] = train.seed;
    j["train"]["dropout_rate"] = train.dropout_rate;
    write_text_atomic(path, j.dump(2) + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (field<std::string>(j, "format", path) != "modmon.checkpoint") {
        throw ParseError(path + ": not a checkpoint file");
    }
    const int version = field<int>(j, "version", path);
    if (version != 1) {
        throw VersionMismatchError(path + ": unsupported checkpoint version " +
                                   std::to_string(version));
    }
    const json& jm = j.at("model");
    const int s = field<int>(jm, "attribute_dim", path);
    const int h = field<int>(jm, "hidden_dim", path);
    const int k = field<int>(jm, "communities", path);
    if (field<std::string>(jm, "activation", path) != "selu") {
        throw ParseError(path + ": unsupported activation");
    }
    DmonModel model(s, h, k);
    const json& jw = jm.at("weights");
    if (!jw.contains("w_conv") || !jw.contains("w_skip") || !jw.contains("w_out")) {
        throw ParseError(path + ": missing weight matrices");
    }
    model.parameters().at("w_conv") =
        matrix_from_json(jw.at("w_conv"), s, h, path + ": w_conv");
    model.parameters().at("w_skip") =
        matrix_from_json(jw.at("w_skip"), s, h, path + ": w_skip");
    model.parameters().at("w_out") =
        matrix_from_json(jw.at("w_out"), h, k, path + ": w_out");

    const json& jt = j.at("train");
    TrainConfig train;
    train.learning_rate = field<double>(jt, "learning_rate", path);
    train.epochs = field<int>(jt, "epochs", path);
    train.regularizer = parse_regularizer(field<std::string>(jt, "regularizer", path));
    train.reg_weight = field<double>(jt, "reg_weight", path);
    train.seed = field<std::uint64_t>(jt, "seed", path);
    train.dropout_rate = field<double>(jt, "dropout_rate", path);
    return Checkpoint{std::move(model), train};
}

void write_monitor_csv(const std::vector<double>& phase1_scores,
                       const std::vector<double>& phase2_scores,
                       const MonitorResult& result, const std::string& path) {
    if (result.z_series.size() != phase2_scores.size()) {
        throw DimensionMismatchError("monitor result does not match phase-two scores");
    }
    std::ostringstream out;
    out << "segment,t,score,z,lower,upper,alarm\n";
    for (std::size_t i = 0; i < phase1_scores.size(); ++i) {
        out << "phase1," << i << ',' << format_double(phase1_scores[i]) << ",,,,\n";
    }
    std::size_t alarm_at = 0;
    for (std::size_t i = 0; i < phase2_scores.size(); ++i) {
        const int step = static_cast<int>(i) + 1;
        bool alarmed = false;
        if (alarm_at < result.alarm_steps.size() &&
            result.alarm_steps[alarm_at] == step) {
            alarmed = true;
            ++alarm_at;
        }
        out << "phase2," << phase1_scores.size() + i << ','
            << format_double(phase2_scores[i]) << ',' << format_double(result.z_series[i])
            << ',' << format_double(result.lower_limits[i]) << ','
            << format_double(result.upper_limits[i]) << ',' << (alarmed ? 1 : 0) << '\n';
    }
    write_text_atomic(path, out.str());
}

void render_control_chart(const std::vector<double>& phase1_scores,
                          const std::vector<double>& phase2_scores,
                          const MonitorResult& result, const EwmaChart& chart,
                          const std::string& path) {
    if (result.z_series.size() != phase2_scores.size()) {
        throw DimensionMismatchError("monitor result does not match phase-two scores");
    }
    const std::size_t total = phase1_scores.size() + phase2_scores.size();
    if (total == 0) throw InvalidArgumentError("nothing to plot");

    const double width = 960.0, height = 540.0;
    const double ml = 70.0, mr = 24.0, mt = 42.0, mb = 48.0;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double lo = chart.mu_hat, hi = chart.mu_hat;
    auto stretch = [&](const std::vector<double>& v) {
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    };
    stretch(phase1_scores);
    stretch(phase2_scores);
    stretch(result.z_series);
    stretch(result.lower_limits);
    stretch(result.upper_limits);
    double pad = (hi - lo) * 0.08;
    if (pad <= 0.0) pad = std::max(std::abs(hi), 1.0) * 0.05;
    lo -= pad;
    hi += pad;

    const double denom = total > 1 ? static_cast<double>(total - 1) : 1.0;
    auto x_at = [&](double index) { return ml + index / denom * pw; };
    auto y_at = [&](double v) { return mt + (hi - v) / (hi - lo) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
        << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#999\"/>\n";
    svg << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\""
        << " fill=\"#222\">modularity score monitoring</text>\n";

    for (int tick = 0; tick <= 5; ++tick) {
        const double v = lo + (hi - lo) * tick / 5.0;
        const double y = y_at(v);
        svg << "<line x1=\"" << ml << "\" y1=\"" << format_coord(y) << "\" x2=\""
            << width - mr << "\" y2=\"" << format_coord(y)
            << "\" stroke=\"#eee\"/>\n";
        svg << "<text x=\"" << ml - 8 << "\" y=\"" << format_coord(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\""
            << " fill=\"#444\">" << format_tick(v) << "</text>\n";
    }
    const std::size_t x_step = std::max<std::size_t>(1, total / 10);
    for (std::size_t i = 0; i < total; i += x_step) {
        const double x = x_at(static_cast<double>(i));
        svg << "<text x=\"" << format_coord(x) << "\" y=\"" << height - mb + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\""
            << " fill=\"#444\">" << i << "</text>\n";
    }
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
        << " fill=\"#222\">snapshot</text>\n";

    auto polyline = [&](const std::vector<double>& values, std::size_t offset,
                        const std::string& style) {
        if (values.empty()) return;
        svg << "<polyline fill=\"none\" " << style << " points=\"";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i > 0) svg << ' ';
            svg << format_coord(x_at(static_cast<double>(offset + i))) << ','
                << format_coord(y_at(values[i]));
        }
        svg << "\"/>\n";
    };

    if (!phase1_scores.empty() && !phase2_scores.empty()) {
        const double x = x_at(static_cast<double>(phase1_scores.size()) - 0.5);
        svg << "<line x1=\"" << format_coord(x) << "\" y1=\"" << mt << "\" x2=\""
            << format_coord(x) << "\" y2=\"" << mt + ph
            << "\" stroke=\"#888\" stroke-dasharray=\"4 4\"/>\n";
    }
    svg << "<line x1=\"" << ml << "\" y1=\"" << format_coord(y_at(chart.mu_hat))
        << "\" x2=\"" << width - mr << "\" y2=\"" << format_coord(y_at(chart.mu_hat))
        << "\" stroke=\"#aaa\" stroke-dasharray=\"2 3\"/>\n";

    polyline(phase1_scores, 0, "stroke=\"#4878a8\" stroke-width=\"1.5\"");
    const std::size_t offset = phase1_scores.size();
    for (std::size_t i = 0; i < phase2_scores.size(); ++i) {
        svg << "<circle cx=\"" << format_coord(x_at(static_cast<double>(offset + i)))
            << "\" cy=\"" << format_coord(y_at(phase2_scores[i]))
            << "\" r=\"2\" fill=\"#bbb\"/>\n";
    }
    polyline(result.lower_limits, offset,
             "stroke=\"#c23\" stroke-width=\"1\" stroke-dasharray=\"6 3\"");
    polyline(result.upper_limits, offset,
             "stroke=\"#c23\" stroke-width=\"1\" stroke-dasharray=\"6 3\"");
    polyline(result.z_series, offset, "stroke=\"#222\" stroke-width=\"1.8\"");
    for (int step : result.alarm_steps) {
        const std::size_t i = static_cast<std::size_t>(step - 1);
        svg << "<circle cx=\"" << format_coord(x_at(static_cast<double>(offset + i)))
            << "\" cy=\"" << format_coord(y_at(result.z_series[i]))
            << "\" r=\"4\" fill=\"#c23\"/>\n";
    }

    const double lx = ml + 10, ly = mt + 14;
    svg << "<text x=\"" << lx << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#4878a8\">phase one scores"
        << "</text>\n";
    svg << "<text x=\"" << lx << "\" y=\"" << ly + 14
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">smoothed statistic"
        << "</text>\n";
    svg << "<text x=\"" << lx << "\" y=\"" << ly + 28
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c23\">control limits / alarms"
        << "</text>\n";
    svg << "</svg>\n";
    write_text_atomic(path, svg.str());
}

namespace {

void append_metrics_row(std::ostringstream& out, const MetricsRow& row) {
    const ExperimentMetrics& m = *row.metrics;
    out << row.label << ',';
    if (row.step) out << *row.step;
    out << ',' << m.replications << ',' << m.phase2_len << ','
        << format_double(m.detection_percentage) << ',';
    if (m.conditional_expected_delay) out << format_double(*m.conditional_expected_delay);
    out << ',' << format_double(m.avg_pct_over_threshold) << '\n';
}

}  // namespace

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "label,step,replications,phase2_len,detection_percentage,"
           "conditional_expected_delay,avg_pct_over_threshold\n";
    for (const auto& row : rows) {
        if (!row.metrics) throw InvalidArgumentError("metrics row without metrics");
        append_metrics_row(out, row);
    }
    write_text_atomic(path, out.str());
}

void write_runs_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "label,step,replication_id,first_alarm,alarm_count,phase1_mean,phase1_sigma\n";
    for (const auto& row : rows) {
        if (!row.metrics) throw InvalidArgumentError("metrics row without metrics");
        for (const auto& run : row.metrics->runs) {
            out << row.label << ',';
            if (row.step) out << *row.step;
            out << ',' << run.replication_id << ',';
            if (run.monitoring.first_alarm) out << *run.monitoring.first_alarm;
            out << ',' << run.monitoring.alarm_steps.size() << ','
                << format_double(run.chart.mu_hat) << ','
                << format_double(run.chart.sigma_hat) << '\n';
        }
    }
    write_text_atomic(path, out.str());
}

void write_series_csv(const std::string& column_name, const std::vector<double>& values,
                      const std::string& path) {
    std::ostringstream out;
    out << "index," << column_name << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << i << ',' << format_double(values[i]) << '\n';
    }
    write_text_atomic(path, out.str());
}

}  // namespace modmon
