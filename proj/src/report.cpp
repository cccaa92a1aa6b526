#include "spdelab/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace spdelab {

const std::map<std::string, std::string>& check_anchor_registry() {
    static const std::map<std::string, std::string> registry = {
        {"assumptions", "Assumptions 3.1-3.3 coefficient validation"},
        {"psi-inequality", "Lemma 5.2 weight inequality"},
        {"heat-oracle", "Eq. (3.1) linear-part heat oracle"},
        {"positivity", "Lemma 4.3 positivity"},
        {"martingale", "Lemma 5.3 supermartingale"},
        {"martingale-sup", "Lemma 5.3 sup bound"},
        {"moment", "Lemma 4.5 moment bound"},
        {"exponents-time", "Corollary 3.9/3.14 time exponent"},
        {"exponents-space", "Corollary 3.9/3.14 space exponent"},
        {"embedding", "Corollary 2.9 embedding"},
    };
    return registry;
}

namespace {

std::string format_margin(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string csv_from_curve(const nlohmann::json& check, const std::string& fingerprint) {
    std::ostringstream os;
    os << "# fingerprint=" << fingerprint << "\n";
    os << "t,mean,se\n";
    const auto& curve = check.at("curve");
    const auto& t = curve.at("t");
    const auto& mean = curve.at("mean");
    const auto& se = curve.at("se");
    os.precision(17);
    for (std::size_t i = 0; i < t.size(); ++i)
        os << t[i].get<double>() << "," << mean[i].get<double>() << ","
           << se[i].get<double>() << "\n";
    return os.str();
}

std::string csv_from_table(const nlohmann::json& check, const std::string& fingerprint) {
    std::ostringstream os;
    os << "# fingerprint=" << fingerprint << "\n";
    os << "lag,median_abs_increment,count\n";
    const auto& table = check.at("table");
    const auto& lags = table.at("lags");
    const auto& med = table.at("median_increment");
    const auto& counts = table.at("counts");
    os.precision(17);
    for (std::size_t i = 0; i < lags.size(); ++i)
        os << lags[i].get<std::size_t>() << "," << med[i].get<double>() << ","
           << counts[i].get<std::size_t>() << "\n";
    return os.str();
}

} // namespace

RenderedReport render_report(const nlohmann::json& summary) {
    RenderedReport out;
    if (!summary.contains("fingerprint") || !summary.contains("checks"))
        throw std::invalid_argument("report: summary is missing required fields");
    const std::string fp = summary.at("fingerprint").get<std::string>();

    std::ostringstream os;
    os << "run " << fp;
    if (summary.contains("code_version"))
        os << " (" << summary.at("code_version").get<std::string>() << ")";
    os << "\n";
    if (summary.contains("termination")) {
        const auto& t = summary.at("termination");
        os << "paths " << t.at("paths").get<std::size_t>() << ": "
           << t.at("completed").get<std::size_t>() << " completed, "
           << t.at("suspected_blowup").get<std::size_t>() << " suspected blow-up, "
           << t.at("numerical_blowup").get<std::size_t>() << " numerical blow-up, "
           << t.at("stability_budget").get<std::size_t>() << " budget stops; "
           << t.at("paste_events").get<std::size_t>() << " paste events\n";
    }

    bool all = true;
    const auto& registry = check_anchor_registry();
    for (const auto& check : summary.at("checks")) {
        const std::string id = check.at("check").get<std::string>();
        const std::string anchor = check.at("anchor").get<std::string>();
        auto it = registry.find(id);
        if (it == registry.end() || it->second != anchor)
            throw std::invalid_argument("report: anchor '" + anchor +
                                        "' for check '" + id + "' is not registered");
        const bool pass = check.at("pass").get<bool>();
        all = all && pass;
        os << anchor << ": " << (pass ? "PASS" : "FAIL");
        if (check.contains("margin") && check.at("margin").is_number())
            os << ", margin " << format_margin(check.at("margin").get<double>());
        if (check.contains("error"))
            os << " (" << check.at("error").get<std::string>() << ")";
        os << "\n";

        if (check.contains("curve"))
            out.csv_files["martingale_curve.csv"] = csv_from_curve(check, fp);
        if (check.contains("table"))
            out.csv_files["structure_" + (id == "exponents-time" ? std::string("time")
                                                                 : std::string("space")) +
                          ".csv"] = csv_from_table(check, fp);
    }
    os << (all ? "ALL CHECKS PASS" : "CHECK FAILURES PRESENT") << "\n";
    out.text = os.str();
    out.all_pass = all;
    return out;
}

int write_report(const nlohmann::json& summary, const std::string& out_dir) {
    RenderedReport rendered = render_report(summary);
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os(out_dir + "/report.txt", std::ios::trunc);
        os << rendered.text;
    }
    for (const auto& [name, contents] : rendered.csv_files) {
        std::ofstream os(out_dir + "/" + name, std::ios::trunc);
        os << contents;
    }
    return rendered.all_pass ? 0 : 1;
}

} // namespace spdelab
