#include "darnet/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "darnet/error.hpp"

namespace darnet {

namespace {

std::string fixed(double v, int decimals)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << v;
    return os.str();
}

std::string pair(const MetricRecord& m)
{
    return format_psnr(m.psnr, 2) + " / " + fixed(m.ssim, 3);
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    out << text;
}

std::filesystem::path markdown_path(const std::filesystem::path& path)
{
    auto md = path;
    md.replace_extension(".md");
    return md;
}

} // namespace

std::string markdown_table(const std::vector<std::vector<std::string>>& rows)
{
    if (rows.empty())
        return {};
    std::vector<std::size_t> width(rows.front().size(), 3);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size() && c < width.size(); ++c)
            width[c] = std::max(width[c], r[c].size());
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
        os << '|';
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < r.size() ? r[c] : "";
            os << ' ' << cell << std::string(width[c] - cell.size(), ' ') << " |";
        }
        os << '\n';
    };
    line(rows.front());
    os << '|';
    for (auto w : width)
        os << ' ' << std::string(w, '-') << " |";
    os << '\n';
    for (std::size_t r = 1; r < rows.size(); ++r)
        line(rows[r]);
    return os.str();
}

std::string report_csv(const BenchmarkReport& report)
{
    std::ostringstream os;
    os << "task,level,images,corrupted_psnr,corrupted_ssim,restored_psnr,restored_ssim,routing_accuracy,"
          "expert_psnr,expert_ssim\n";
    for (const auto& row : report.rows) {
        os << row.task.label << ',' << level_string(row.task.level) << ',' << row.images << ','
           << fixed(row.corrupted.psnr, 6) << ',' << fixed(row.corrupted.ssim, 6) << ','
           << fixed(row.restored.psnr, 6) << ',' << fixed(row.restored.ssim, 6) << ','
           << fixed(row.routing_accuracy, 6) << ',';
        if (row.expert_path)
            os << fixed(row.expert_path->psnr, 6) << ',' << fixed(row.expert_path->ssim, 6);
        else
            os << ',';
        os << '\n';
    }
    return os.str();
}

std::string report_markdown(const BenchmarkReport& report)
{
    std::vector<std::vector<std::string>> rows{
        {"Task", "Level", "Corrupted", "Restored", "Expert only", "Routing acc."}};
    for (const auto& row : report.rows)
        rows.push_back({row.task.label, level_string(row.task.level), pair(row.corrupted), pair(row.restored),
                        row.expert_path ? pair(*row.expert_path) : "-",
                        fixed(100.0 * row.routing_accuracy, 2) + "%"});
    std::ostringstream os;
    os << "Seed " << report.seed << ", " << report.images << " images, PSNR [dB] / SSIM\n\n" << markdown_table(rows);

    std::vector<std::vector<std::string>> confusion{{"True \\ Predicted"}};
    for (const auto& l : report.router_labels)
        confusion.front().push_back(l);
    for (const auto& [truth, predicted] : report.confusion) {
        std::vector<std::string> r{truth};
        for (const auto& l : report.router_labels) {
            const auto it = predicted.find(l);
            r.push_back(std::to_string(it == predicted.end() ? 0 : it->second));
        }
        confusion.push_back(std::move(r));
    }
    os << "\nRouting confusion\n\n" << markdown_table(confusion);
    return os.str();
}

std::string phase_table_csv(const PhaseTable& table)
{
    std::ostringstream os;
    os << "task,level,corrupted_psnr,corrupted_ssim";
    for (const auto& p : table.phases)
        os << ',' << p << "_psnr," << p << "_ssim," << p << "_expert_psnr," << p << "_expert_ssim," << p
           << "_routing";
    os << '\n';
    for (std::size_t t = 0; t < table.tasks.size(); ++t) {
        os << table.tasks[t].label << ',' << level_string(table.tasks[t].level) << ','
           << fixed(table.corrupted[t].psnr, 6) << ',' << fixed(table.corrupted[t].ssim, 6);
        for (const auto& cell : table.cells[t]) {
            os << ',' << fixed(cell.routed.psnr, 6) << ',' << fixed(cell.routed.ssim, 6) << ',';
            if (cell.expert_path)
                os << fixed(cell.expert_path->psnr, 6) << ',' << fixed(cell.expert_path->ssim, 6);
            else
                os << ',';
            os << ',' << fixed(cell.routing_accuracy, 6);
        }
        os << '\n';
    }
    return os.str();
}

std::string phase_table_markdown(const PhaseTable& table)
{
    std::vector<std::vector<std::string>> rows{{"Task", "Level", "Corrupted"}};
    for (const auto& p : table.phases)
        rows.front().push_back(p);
    for (std::size_t t = 0; t < table.tasks.size(); ++t) {
        std::vector<std::string> r{table.tasks[t].label, level_string(table.tasks[t].level), pair(table.corrupted[t])};
        for (const auto& cell : table.cells[t])
            r.push_back(pair(cell.routed));
        rows.push_back(std::move(r));
    }
    std::ostringstream os;
    os << "Routed restoration, PSNR [dB] / SSIM\n\n" << markdown_table(rows);
    os << "\nExpert-path metrics frozen after introduction: " << (table.frozen ? "yes" : "no")
       << " (max deviation " << table.max_frozen_deviation << ")\n";
    return os.str();
}

void write_report(const BenchmarkReport& report, const std::filesystem::path& path)
{
    write_text(path, report_csv(report));
    write_text(markdown_path(path), report_markdown(report));
}

void write_phase_table(const PhaseTable& table, const std::filesystem::path& path)
{
    write_text(path, phase_table_csv(table));
    write_text(markdown_path(path), phase_table_markdown(table));
}

} // namespace darnet
