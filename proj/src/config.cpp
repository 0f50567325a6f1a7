#include "emsq/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

extern char** environ;

namespace emsq {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::stringstream ss(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw parse_error("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = lower(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = lower(trim(line.substr(0, eq)));
        if (key.empty())
            throw parse_error("config line " + std::to_string(line_no) + ": empty key");
        cfg.values_[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("config: cannot open " + path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    auto cfg = parse(buffer.str());
    cfg.apply_env_overrides();
    return cfg;
}

void Config::apply_env_overrides() {
    for (char** env = environ; env && *env; ++env) {
        const std::string entry(*env);
        if (entry.rfind("EMSQ_", 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string key = entry.substr(5, eq - 5);
        const auto sep = key.find('_');
        if (sep == std::string::npos) continue;
        const std::string section = lower(key.substr(0, sep));
        const std::string name = lower(key.substr(sep + 1));
        values_[section + "." + name] = entry.substr(eq + 1);
    }
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw config_error("config: '" + key + "' is not an integer: " + it->second);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw config_error("config: '" + key + "' is not a number: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string v = lower(it->second);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw config_error("config: '" + key + "' is not a boolean: " + it->second);
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    std::vector<std::string> out;
    const auto it = values_.find(key);
    if (it == values_.end()) return out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!trim(tok).empty()) out.push_back(trim(tok));
    return out;
}

std::string Config::to_text() const {
    std::map<std::string, std::map<std::string, std::string>> by_section;
    for (const auto& [key, value] : values_) {
        const auto dot = key.find('.');
        if (dot == std::string::npos)
            by_section[""][key] = value;
        else
            by_section[key.substr(0, dot)][key.substr(dot + 1)] = value;
    }
    std::ostringstream os;
    for (const auto& [section, entries] : by_section) {
        if (!section.empty()) os << "[" << section << "]\n";
        for (const auto& [key, value] : entries) os << key << " = " << value << "\n";
    }
    return os.str();
}

double parse_budget(const std::string& token) {
    std::string t = trim(token);
    bool percent = false;
    if (!t.empty() && t.back() == '%') {
        percent = true;
        t.pop_back();
    }
    double v;
    try {
        v = std::stod(t);
    } catch (const std::exception&) {
        throw config_error("budget: cannot parse '" + token + "'");
    }
    if (percent) v /= 100.0;
    if (v <= 0 || v > 1.0) throw config_error("budget: '" + token + "' outside (0, 100%]");
    return v;
}

std::string budget_label(double fraction) { return format_percent(fraction); }

RunConfig RunConfig::from_config(Config cfg) {
    RunConfig rc;
    rc.raw = cfg;
    rc.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 42));
    rc.out_dir = cfg.get("run.out", "runs/out");
    rc.jobs = static_cast<int>(cfg.get_int("run.jobs", 1));
    rc.methods = cfg.get_list("run.methods");
    for (const auto& b : cfg.get_list("run.budgets")) rc.budgets.push_back(parse_budget(b));
    if (rc.budgets.empty()) rc.budgets = {0.5, 0.1, 0.01, 0.001};

    rc.train.dim = cfg.get_int("model.dim", 16);
    rc.train.hidden1 = cfg.get_int("model.hidden1", 64);
    rc.train.hidden2 = cfg.get_int("model.hidden2", 32);
    rc.train.batch_size = cfg.get_int("train.batch_size", 128);
    rc.train.optimizer.lr = cfg.get_double("train.lr", 0.001);
    const std::string opt = cfg.get("train.optimizer", "adam");
    if (opt == "adam")
        rc.train.optimizer.kind = OptimizerConfig::Kind::kAdam;
    else if (opt == "sgd")
        rc.train.optimizer.kind = OptimizerConfig::Kind::kSgd;
    else
        throw config_error("config: unknown optimizer '" + opt + "'");
    rc.train.warmup_epochs = cfg.get_double("train.warmup_epochs", 2.0);
    rc.train.search_epochs = cfg.get_double("train.search_epochs", 1.0);
    rc.train.retrain_epochs = cfg.get_double("train.retrain_epochs", 1.0);
    rc.train.eval_every = cfg.get_double("train.eval_every", 0.25);
    rc.train.patience = static_cast<int>(cfg.get_int("train.patience", 3));

    rc.solver.robe_chunk = cfg.get_int("solver.robe_chunk", 8);
    rc.solver.mde_alpha = cfg.get_double("solver.mde_alpha", 0.3);
    rc.solver.tt_cores = static_cast<int>(cfg.get_int("solver.tt_cores", 2));
    rc.solver.promote_threshold =
            static_cast<std::uint32_t>(cfg.get_int("solver.promote_threshold", 16));
    rc.solver.lsh_projections = cfg.get_int("solver.lsh_projections", 4);
    rc.solver.lsh_width = cfg.get_double("solver.lsh_width", 0.05);
    rc.solver.groups = cfg.get_int("solver.groups", 4);

    rc.data_source = cfg.get("data.source", "synthetic");
    if (rc.data_source == "synthetic") {
        const auto cards = cfg.get_list("data.cardinalities");
        if (!cards.empty()) {
            rc.synthetic.cardinalities.clear();
            for (const auto& c : cards) rc.synthetic.cardinalities.push_back(std::stoll(c));
        } else {
            const index_t fields = cfg.get_int("data.fields", 4);
            const index_t card = cfg.get_int("data.cardinality", 25000);
            rc.synthetic.cardinalities.assign(fields, card);
        }
        rc.synthetic.zipf_exponent = cfg.get_double("data.zipf", 1.4);
        rc.synthetic.dense_width = cfg.get_int("data.dense_width", 2);
        rc.synthetic.true_dim = cfg.get_int("data.true_dim", 8);
        rc.synthetic.temperature = cfg.get_double("data.temperature", 1.0);
        rc.synthetic.samples = cfg.get_int("data.samples", 100000);
        rc.synthetic.seed = static_cast<std::uint64_t>(
                cfg.get_int("data.seed", static_cast<std::int64_t>(rc.seed)));
        rc.synthetic.train_fraction = cfg.get_double("data.train_fraction", 0.8);
        rc.synthetic.validation_fraction = cfg.get_double("data.validation_fraction", 0.1);
    } else if (rc.data_source == "csv") {
        rc.csv_path = cfg.get("data.path", "");
        if (rc.csv_path.empty()) throw config_error("config: data.path required for csv source");
        rc.csv_schema.label_column = cfg.get("data.label", "label");
        rc.csv_schema.categorical_columns = cfg.get_list("data.categoricals");
        rc.csv_schema.numeric_columns = cfg.get_list("data.numerics");
        rc.csv_schema.log_transform = cfg.get_bool("data.log_transform", true);
        rc.csv_schema.train_fraction = cfg.get_double("data.train_fraction", 0.8);
        rc.csv_schema.validation_fraction = cfg.get_double("data.validation_fraction", 0.1);
        rc.csv_schema.seed = static_cast<std::uint64_t>(
                cfg.get_int("data.seed", static_cast<std::int64_t>(rc.seed)));
    } else if (rc.data_source == "checkpoint") {
        rc.dataset_path = cfg.get("data.path", "");
        if (rc.dataset_path.empty())
            throw config_error("config: data.path required for checkpoint source");
    } else {
        throw config_error("config: unknown data source '" + rc.data_source + "'");
    }

    rc.matrix_path = cfg.get("posttrain.matrix", "");
    rc.queries_spec = cfg.get("posttrain.queries", "gaussian:100");
    rc.recall_k = cfg.get_int("posttrain.k", 10);
    rc.decompress_batch = cfg.get_int("posttrain.decompress_batch", 1024);
    return rc;
}

Dataset RunConfig::load_dataset() const {
    if (data_source == "synthetic") return generate(synthetic);
    if (data_source == "csv") return load_csv(csv_path, csv_schema);
    return Dataset::from_checkpoint(Checkpoint::load(dataset_path));
}

}  // namespace emsq
