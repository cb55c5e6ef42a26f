#include "digsp/report.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "digsp/data.hpp"
#include "digsp/errors.hpp"

namespace digsp {

namespace {

using nlohmann::json;

std::vector<std::string> feature_name_vector() {
    return std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());
}

json member_to_json(const SerializedMember& m) {
    return json{{"population_id", m.population_id},
                {"genes", m.genes},
                {"beta", m.beta},
                {"intercept", m.intercept}};
}

SerializedMember member_from_json(const json& j) {
    SerializedMember m;
    m.population_id = j.at("population_id").get<std::string>();
    m.genes = j.at("genes").get<std::vector<std::string>>();
    m.beta = j.at("beta").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    return m;
}

json model_to_json(const SerializedModel& m) {
    json abstractions = json::array();
    for (const auto& [id, expr] : m.abstractions) {
        abstractions.push_back(json{{"id", id}, {"expression", expr}});
    }
    json members = json::array();
    for (const auto& member : m.members) members.push_back(member_to_json(member));
    return json{{"members", members},
                {"fusion_beta", m.fusion_beta},
                {"fusion_intercept", m.fusion_intercept},
                {"train_rmse", m.train_rmse},
                {"val_rmse", m.val_rmse},
                {"abstractions", abstractions}};
}

SerializedModel model_from_json(const json& j) {
    SerializedModel m;
    for (const auto& member : j.at("members")) m.members.push_back(member_from_json(member));
    m.fusion_beta = j.at("fusion_beta").get<std::vector<double>>();
    m.fusion_intercept = j.at("fusion_intercept").get<double>();
    m.train_rmse = j.at("train_rmse").get<double>();
    m.val_rmse = j.at("val_rmse").get<double>();
    for (const auto& a : j.at("abstractions")) {
        m.abstractions.emplace_back(a.at("id").get<std::int32_t>(),
                                    a.at("expression").get<std::string>());
    }
    return m;
}

json activation_to_json(const ActivationLog& log) {
    json entries = json::array();
    for (const auto& e : log.entries) {
        entries.push_back(json{{"population_id", e.population_id},
                               {"p_value", e.p_value},
                               {"isolated_fitness", e.isolated_fitness},
                               {"assigned_id", e.assigned_id},
                               {"accepted", e.accepted},
                               {"prune_rounds", e.prune_rounds},
                               {"standalone_train_rmse", e.standalone_train_rmse},
                               {"standalone_val_rmse", e.standalone_val_rmse}});
    }
    return json{{"generation", log.generation},
                {"candidate_count", log.candidate_count},
                {"entries", entries},
                {"accepted_ids", log.accepted_ids}};
}

ActivationLog activation_from_json(const json& j) {
    ActivationLog log;
    log.generation = j.at("generation").get<int>();
    log.candidate_count = j.at("candidate_count").get<std::size_t>();
    for (const auto& e : j.at("entries")) {
        CandidateLog c;
        c.population_id = e.at("population_id").get<std::string>();
        c.p_value = e.at("p_value").get<double>();
        c.isolated_fitness = e.at("isolated_fitness").get<double>();
        c.assigned_id = e.at("assigned_id").get<std::int32_t>();
        c.accepted = e.at("accepted").get<bool>();
        c.prune_rounds = e.at("prune_rounds").get<int>();
        c.standalone_train_rmse = e.at("standalone_train_rmse").get<double>();
        c.standalone_val_rmse = e.at("standalone_val_rmse").get<double>();
        log.entries.push_back(std::move(c));
    }
    log.accepted_ids = j.at("accepted_ids").get<std::vector<std::int32_t>>();
    return log;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

SerializedModel serialize_model(const EnsembleModel& model, const AbstractionRegistry& registry) {
    const auto names = feature_name_vector();
    SerializedModel out;
    for (const auto& member : model.members) {
        SerializedMember m;
        m.population_id = member.population_id;
        for (const auto& gene : member.individual.genes) {
            m.genes.push_back(serialize(gene, names));
        }
        if (!member.individual.fit) {
            throw StructuralError("serialize_model: member without stored fit");
        }
        m.beta = member.individual.fit->beta;
        m.intercept = member.individual.fit->intercept;
        out.members.push_back(std::move(m));
    }
    out.fusion_beta = model.fusion.beta;
    out.fusion_intercept = model.fusion.intercept;
    out.train_rmse = model.train_rmse;
    out.val_rmse = model.val_rmse;
    for (const auto& [id, expr] : registry.all()) {
        out.abstractions.emplace_back(id, serialize(expr, names));
    }
    return out;
}

RestoredModel restore_model(const SerializedModel& serialized) {
    const auto names = feature_name_vector();
    RestoredModel out;
    for (const auto& [id, text] : serialized.abstractions) {
        out.registry.add(id, parse(text, names));
    }
    for (const auto& m : serialized.members) {
        EnsembleMember member;
        member.population_id = m.population_id;
        for (const auto& text : m.genes) {
            member.individual.genes.push_back(parse(text, names));
        }
        LinearFit fit;
        fit.beta = m.beta;
        fit.intercept = m.intercept;
        member.individual.fit = std::move(fit);
        out.model.members.push_back(std::move(member));
    }
    out.model.fusion.beta = serialized.fusion_beta;
    out.model.fusion.intercept = serialized.fusion_intercept;
    out.model.train_rmse = serialized.train_rmse;
    out.model.val_rmse = serialized.val_rmse;
    return out;
}

std::string report_to_json(const RunReport& r) {
    json j{{"run_index", r.run_index},
           {"seed", r.seed},
           {"split_seed", r.split_seed},
           {"mode", r.mode},
           {"scheme", r.scheme},
           {"failed", r.failed},
           {"error", r.error},
           {"train_rmse", r.train_rmse},
           {"val_rmse", r.val_rmse},
           {"test_rmse", r.test_rmse},
           {"generations", r.generations},
           {"wall_seconds", r.wall_seconds},
           {"parsimony",
            json{{"n_terms", r.parsimony_profile.n_terms},
                 {"tree_size_nodes", r.parsimony_profile.tree_size_nodes},
                 {"operator_count", r.parsimony_profile.operator_count}}},
           {"x_median", r.x_median},
           {"model", model_to_json(r.model)}};
    json activations = json::array();
    for (const auto& a : r.activations) activations.push_back(activation_to_json(a));
    j["activations"] = activations;
    return j.dump(2);
}

RunReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IngestionError(std::string("run report is not valid JSON: ") + e.what());
    }
    try {
        RunReport r;
        r.run_index = j.at("run_index").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.split_seed = j.at("split_seed").get<std::uint64_t>();
        r.mode = j.at("mode").get<std::string>();
        r.scheme = j.at("scheme").get<std::string>();
        r.failed = j.at("failed").get<bool>();
        r.error = j.at("error").get<std::string>();
        r.train_rmse = j.at("train_rmse").get<double>();
        r.val_rmse = j.at("val_rmse").get<double>();
        r.test_rmse = j.at("test_rmse").get<double>();
        r.generations = j.at("generations").get<int>();
        r.wall_seconds = j.at("wall_seconds").get<double>();
        const auto& p = j.at("parsimony");
        r.parsimony_profile.n_terms = p.at("n_terms").get<unsigned long long>();
        r.parsimony_profile.tree_size_nodes = p.at("tree_size_nodes").get<int>();
        r.parsimony_profile.operator_count = p.at("operator_count").get<int>();
        r.x_median = j.at("x_median").get<std::vector<double>>();
        r.model = model_from_json(j.at("model"));
        for (const auto& a : j.at("activations")) r.activations.push_back(activation_from_json(a));
        return r;
    } catch (const json::exception& e) {
        throw IngestionError(std::string("run report misses required fields: ") + e.what());
    }
}

std::string save_report(const RunReport& report, const std::string& output_dir) {
    std::filesystem::create_directories(output_dir);
    std::ostringstream name;
    name << report.mode << "_run";
    const std::string idx = std::to_string(report.run_index);
    for (std::size_t i = idx.size(); i < 3; ++i) name << '0';
    name << idx << ".json";
    const std::string path = (std::filesystem::path(output_dir) / name.str()).string();
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write run report '" + path + "'");
    out << report_to_json(report) << '\n';
    if (!out) throw IngestionError("failed writing run report '" + path + "'");
    return path;
}

RunReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open run report '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return report_from_json(buf.str());
}

std::vector<RunReport> load_reports(const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IngestionError("report directory '" + dir + "' does not exist");
    }
    std::vector<RunReport> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (entry.path().extension() != ".json") continue;
        if (name.rfind("digsp_run", 0) != 0 && name.rfind("bgp_run", 0) != 0) continue;
        out.push_back(load_report(entry.path().string()));
    }
    std::sort(out.begin(), out.end(), [](const RunReport& a, const RunReport& b) {
        if (a.mode != b.mode) return a.mode < b.mode;
        return a.run_index < b.run_index;
    });
    return out;
}

void write_summary_csv(const std::vector<RunReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write summary '" + path + "'");
    out << "run_index,mode,seed,failed,train_rmse,val_rmse,test_rmse,generations,"
           "wall_seconds,n_terms,tree_size_nodes,operator_count,activation_count\n";
    for (const auto& r : reports) {
        out << r.run_index << ',' << r.mode << ',' << r.seed << ',' << (r.failed ? 1 : 0) << ','
            << format_double(r.train_rmse) << ',' << format_double(r.val_rmse) << ','
            << format_double(r.test_rmse) << ',' << r.generations << ','
            << format_double(r.wall_seconds) << ',' << r.parsimony_profile.n_terms << ','
            << r.parsimony_profile.tree_size_nodes << ',' << r.parsimony_profile.operator_count
            << ',' << r.activations.size() << '\n';
    }
    if (!out) throw IngestionError("failed writing summary '" + path + "'");
}

}  // namespace digsp
