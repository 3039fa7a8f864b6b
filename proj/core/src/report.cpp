#include "puf_forge/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace puf_forge {

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string render_boxplot_svg(std::span<const LabeledSummary> boxes, std::string_view title,
                               std::string_view axis_label) {
    constexpr double width_per_box = 120.0, height = 360.0, top = 40.0, bottom = 300.0, left = 60.0;
    const double width = left + width_per_box * static_cast<double>(std::max<std::size_t>(1, boxes.size())) + 20.0;
    double lo = 0.0, hi = 1.0;
    if (!boxes.empty()) {
        lo = boxes.front().second.min;
        hi = boxes.front().second.max;
        for (const auto& [label, s] : boxes) {
            lo = std::min(lo, s.min);
            hi = std::max(hi, s.max);
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    auto y = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
        << num(bottom) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">"
            << num(v) << "</text>\n";
    }
    svg << "<text x=\"14\" y=\"" << num((top + bottom) / 2) << "\" transform=\"rotate(-90 14 "
        << num((top + bottom) / 2) << ")\" text-anchor=\"middle\">" << axis_label << "</text>\n";
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& [label, s] = boxes[i];
        const double cx = left + width_per_box * (static_cast<double>(i) + 0.5);
        const double half = width_per_box * 0.25;
        svg << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(s.whisker_low)) << "\" x2=\"" << num(cx)
            << "\" y2=\"" << num(y(s.q1)) << "\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(s.q3)) << "\" x2=\"" << num(cx) << "\" y2=\""
            << num(y(s.whisker_high)) << "\" stroke=\"black\"/>\n";
        for (double w : {s.whisker_low, s.whisker_high})
            svg << "<line x1=\"" << num(cx - half / 2) << "\" y1=\"" << num(y(w)) << "\" x2=\""
                << num(cx + half / 2) << "\" y2=\"" << num(y(w)) << "\" stroke=\"black\"/>\n";
        svg << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(y(s.q3)) << "\" width=\"" << num(2 * half)
            << "\" height=\"" << num(std::max(0.0, y(s.q1) - y(s.q3)))
            << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(y(s.median)) << "\" x2=\"" << num(cx + half)
            << "\" y2=\"" << num(y(s.median)) << "\" stroke=\"#d94801\" stroke-width=\"2\"/>\n";
        for (double o : s.outliers)
            svg << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y(o))
                << "\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << num(cx) << "\" y=\"" << num(bottom + 18) << "\" text-anchor=\"middle\">" << label
            << "</text>\n";
        svg << "<text x=\"" << num(cx) << "\" y=\"" << num(bottom + 34) << "\" text-anchor=\"middle\">mean "
            << num(s.mean) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_attack_report(const AttackReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ostringstream csv;
    csv << "index,fhd_g1,fhd_g2,pearson,ssim\n";
    for (const CrpScore& r : report.rows)
        csv << r.index << ',' << format_double(r.fhd_g1) << ',' << format_double(r.fhd_g2) << ','
            << (r.pearson ? format_double(*r.pearson) : "") << ',' << format_double(r.ssim) << '\n';
    write_text(dir / "per_crp.csv", csv.str());

    nlohmann::json summary = report;
    summary.erase("rows");
    write_json(dir / "summary.json", summary);

    const std::vector<LabeledSummary> boxes{{"FHD G1", report.fhd_g1}, {"FHD G2", report.fhd_g2}};
    write_text(dir / "fhd_boxplot.svg",
               render_boxplot_svg(boxes, std::string("attack ") + std::string(to_string(report.kind)), "FHD"));
}

void write_evaluation_report(const EvaluationReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ostringstream pairs;
    pairs << "a,b,fhd_g1,fhd_g2\n";
    for (const PairRow& p : report.pairs)
        pairs << p.a << ',' << p.b << ',' << format_double(p.fhd_g1) << ',' << format_double(p.fhd_g2) << '\n';
    write_text(dir / "pairs.csv", pairs.str());

    std::ostringstream ent;
    ent << "index,entropy\n";
    for (std::size_t i = 0; i < report.sampled.size(); ++i)
        ent << report.sampled[i] << ',' << format_double(report.entropies[i]) << '\n';
    write_text(dir / "entropy.csv", ent.str());

    write_json(dir / "summary.json", nlohmann::json{{"sample_size", report.sample_size},
                                                    {"seed", report.seed},
                                                    {"pairs", report.pairs.size()},
                                                    {"fhd_g1", report.fhd_g1},
                                                    {"fhd_g2", report.fhd_g2},
                                                    {"entropy", report.entropy}});
    const std::vector<LabeledSummary> boxes{{"FHD G1", report.fhd_g1}, {"FHD G2", report.fhd_g2}};
    write_text(dir / "fhd_boxplot.svg", render_boxplot_svg(boxes, "pairwise response FHD", "FHD"));
}

std::string matrix_csv(std::span<const MatrixRow> rows) {
    std::ostringstream csv;
    csv << "grid_side,scheme,model,status,mean_fhd_g1,mean_fhd_g2,error\n";
    for (const MatrixRow& r : rows) {
        std::string error = r.error;
        std::replace(error.begin(), error.end(), ',', ';');
        std::replace(error.begin(), error.end(), '\n', ' ');
        csv << r.grid_side << ',' << to_string(r.scheme) << ',' << to_string(r.model) << ','
            << (r.ok ? "ok" : "failed") << ',' << (r.ok ? format_double(r.mean_fhd_g1) : "") << ','
            << (r.ok ? format_double(r.mean_fhd_g2) : "") << ',' << error << '\n';
    }
    return csv.str();
}

std::string scale_csv(std::span<const ScaleRow> rows) {
    std::ostringstream csv;
    csv << "model,train_small,train_large,fhd_small,fhd_large,improvement_percent\n";
    for (const ScaleRow& r : rows)
        csv << to_string(r.model) << ',' << r.train_small << ',' << r.train_large << ','
            << format_double(r.fhd_small) << ',' << format_double(r.fhd_large) << ','
            << format_double(r.improvement_percent) << '\n';
    return csv.str();
}

nlohmann::json scale_json(std::span<const ScaleRow> rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const ScaleRow& r : rows)
        out.push_back({{"model", std::string(to_string(r.model))},
                       {"train_small", r.train_small},
                       {"train_large", r.train_large},
                       {"fhd_small", r.fhd_small},
                       {"fhd_large", r.fhd_large},
                       {"improvement_percent", r.improvement_percent}});
    return out;
}

}  // namespace puf_forge
