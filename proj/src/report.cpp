#include "forgecl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "forgecl/errors.hpp"

namespace forgecl {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

std::string fmt_acc(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Fixed palette, one color per strategy in kinds order.
const char* kPalette[] = {"#555555", "#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2"};

struct Series {
    std::string label;
    std::string color;
    std::vector<double> y;  // one value per phase
};

// Minimal self-contained line plot: y in [0,1], x = phase index.
void write_svg_panel(const std::string& path, const std::string& title,
                     const std::vector<Series>& series, int phases) {
    const double W = 480, H = 360;
    const double L = 56, R = 16, T = 40, B = 44;  // margins
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](int phase) {
        return phases > 1 ? L + pw * phase / (phases - 1) : L + pw / 2;
    };
    auto py = [&](double acc) { return T + ph * (1.0 - acc); };

    std::ofstream out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"14\">" << title << "</text>\n";

    for (int g = 0; g <= 4; ++g) {
        const double acc = 0.25 * g;
        const double y = py(acc);
        out << "<line x1=\"" << L << "\" y1=\"" << y << "\" x2=\"" << L + pw << "\" y2=\"" << y
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << L - 6 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_acc(acc).substr(0, 4)
            << "</text>\n";
    }
    for (int p = 0; p < phases; ++p) {
        out << "<text x=\"" << px(p) << "\" y=\"" << T + ph + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << p + 1
            << "</text>\n";
    }
    out << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">phase</text>\n";
    out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333333\"/>\n";

    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
        for (int p = 0; p < phases && p < static_cast<int>(s.y.size()); ++p)
            out << px(p) << "," << py(s.y[static_cast<std::size_t>(p)]) << " ";
        out << "\"/>\n";
    }
    double ly = T + 14;
    for (const auto& s : series) {
        out << "<line x1=\"" << L + 8 << "\" y1=\"" << ly - 4 << "\" x2=\"" << L + 28 << "\" y2=\""
            << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << L + 32 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        ly += 14;
    }
    out << "</svg>\n";
}

// mean over sequences of acc[phase][task]
std::vector<std::vector<double>> mean_task_curves(const std::vector<EvalMatrix>& ms) {
    if (ms.empty()) return {};
    const int S = ms[0].tasks;
    std::vector<std::vector<double>> curves(static_cast<std::size_t>(S),
                                            std::vector<double>(static_cast<std::size_t>(S), 0.0));
    for (const auto& m : ms)
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j)
                curves[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] +=
                    m.at(i, j) / static_cast<double>(ms.size());
    return curves;  // curves[task][phase]
}

}  // namespace

void write_eval_matrix_csv(const EvalMatrix& m, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "# " << kCsvSchema << "\n";
    out << "phase,task,accuracy\n";
    for (int i = 0; i < m.tasks; ++i)
        for (int j = 0; j < m.tasks; ++j)
            out << i << "," << j << "," << fmt_acc(m.at(i, j)) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

void write_summary_csv(const CampaignSummary& s, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "# " << kCsvSchema << "\n";
    out << "strategy,best,mean,worst\n";
    for (const auto& st : s.strategies)
        out << strategy_name(st.kind) << "," << fmt_acc(st.best) << "," << fmt_acc(st.mean) << ","
            << fmt_acc(st.worst) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

void write_curves_csv(const CampaignSummary& s, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "# " << kCsvSchema << "\n";
    out << "strategy,phase,mean_accuracy\n";
    for (const auto& st : s.strategies)
        for (std::size_t p = 0; p < st.mean_curve.size(); ++p)
            out << strategy_name(st.kind) << "," << p << "," << fmt_acc(st.mean_curve[p]) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

void write_task_curves_csv(const CampaignResult& r, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "# " << kCsvSchema << "\n";
    out << "strategy,phase,task,accuracy\n";
    for (const auto& [kind, ms] : r.matrices) {
        const auto curves = mean_task_curves(ms);
        for (std::size_t j = 0; j < curves.size(); ++j)
            for (std::size_t p = 0; p < curves[j].size(); ++p)
                out << strategy_name(kind) << "," << p << "," << j << ","
                    << fmt_acc(curves[j][p]) << "\n";
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

void write_sidecar(const std::string& path, std::uint64_t config_digest, std::uint64_t seed) {
    std::ofstream out = open_out(path);
    out << "{\n"
        << "  \"schema\": \"" << kCsvSchema << "\",\n"
        << "  \"config_digest\": \"" << std::hex << config_digest << std::dec << "\",\n"
        << "  \"seed\": " << seed << "\n"
        << "}\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

int write_campaign_svgs(const CampaignResult& r, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);

    int written = 0;
    int phases = 0;
    std::vector<Series> mean_series;
    std::size_t color = 0;
    for (const auto& [kind, ms] : r.matrices) {
        const auto curves = mean_task_curves(ms);
        phases = static_cast<int>(curves.size());
        std::vector<Series> series;
        for (std::size_t j = 0; j < curves.size(); ++j)
            series.push_back({"task " + std::to_string(j + 1),
                              kPalette[j % std::size(kPalette)], curves[j]});
        const std::string name = strategy_name(kind);
        write_svg_panel(dir + "/strategy_" + name + ".svg", name + ": per-task accuracy", series,
                        phases);
        ++written;

        std::vector<double> mean_curve(static_cast<std::size_t>(phases), 0.0);
        for (int p = 0; p < phases; ++p)
            for (const auto& c : curves)
                mean_curve[static_cast<std::size_t>(p)] += c[static_cast<std::size_t>(p)] /
                                                           static_cast<double>(curves.size());
        mean_series.push_back({name, kPalette[color % std::size(kPalette)], mean_curve});
        ++color;
    }
    write_svg_panel(dir + "/mean_comparison.svg", "mean accuracy over tasks", mean_series, phases);
    return written + 1;
}

int rebuild_svgs_from_csv(const std::string& dir) {
    const std::string path = dir + "/task_curves.csv";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    // strategy -> task -> phase -> acc
    std::map<std::string, std::map<int, std::map<int, double>>> data;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("strategy,", 0) == 0) continue;
        std::istringstream row(line);
        std::string strat, phase_s, task_s, acc_s;
        if (!std::getline(row, strat, ',') || !std::getline(row, phase_s, ',') ||
            !std::getline(row, task_s, ',') || !std::getline(row, acc_s))
            throw DataError("malformed row at " + path + ":" + std::to_string(lineno));
        data[strat][std::stoi(task_s)][std::stoi(phase_s)] = std::stod(acc_s);
    }
    if (data.empty()) throw DataError("no curve rows in '" + path + "'");

    int written = 0, phases = 0;
    std::vector<Series> mean_series;
    std::size_t color = 0;
    for (const auto& [strat, tasks] : data) {
        std::vector<Series> series;
        std::vector<double> mean_curve;
        for (const auto& [task, curve] : tasks) {
            Series s{"task " + std::to_string(task + 1),
                     kPalette[static_cast<std::size_t>(task) % std::size(kPalette)], {}};
            for (const auto& [p, acc] : curve) {
                (void)p;
                s.y.push_back(acc);
            }
            phases = std::max(phases, static_cast<int>(s.y.size()));
            if (mean_curve.size() < s.y.size()) mean_curve.resize(s.y.size(), 0.0);
            series.push_back(std::move(s));
        }
        for (std::size_t p = 0; p < mean_curve.size(); ++p) {
            double sum = 0;
            for (const auto& s : series)
                if (p < s.y.size()) sum += s.y[p];
            mean_curve[p] = sum / static_cast<double>(series.size());
        }
        write_svg_panel(dir + "/strategy_" + strat + ".svg", strat + ": per-task accuracy", series,
                        phases);
        ++written;
        mean_series.push_back({strat, kPalette[color % std::size(kPalette)], mean_curve});
        ++color;
    }
    write_svg_panel(dir + "/mean_comparison.svg", "mean accuracy over tasks", mean_series, phases);
    return written + 1;
}

}  // namespace forgecl
