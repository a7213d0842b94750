#pragma once

// Sectioned key-value run configuration. Unknown sections or keys are errors
// so that typos in hyperparameter sweeps fail loudly. The canonical text form
// (sorted sections and keys) is what manifests snapshot.

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdd {

struct Config {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections.find(section);
        return s != sections.end() && s->second.count(key) > 0;
    }

    std::string get(const std::string& section, const std::string& key) const {
        const auto s = sections.find(section);
        if (s == sections.end() || !s->second.count(key))
            throw std::invalid_argument("config: missing required key " + section + "." + key);
        return s->second.at(key);
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        return has(section, key) ? get(section, key) : fallback;
    }

    int get_int(const std::string& section, const std::string& key) const {
        return parse_int(get(section, key), section + "." + key);
    }
    int get_int_or(const std::string& section, const std::string& key, int fallback) const {
        return has(section, key) ? get_int(section, key) : fallback;
    }
    double get_double(const std::string& section, const std::string& key) const {
        try {
            std::size_t used = 0;
            const std::string v = get(section, key);
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: " + section + "." + key + " is not a number");
        }
    }
    double get_double_or(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_double(section, key) : fallback;
    }
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = get(section, key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw std::invalid_argument("config: " + section + "." + key + " is not a boolean");
    }
    std::vector<int> get_int_list(const std::string& section, const std::string& key) const {
        std::vector<int> out;
        std::stringstream ss(get(section, key));
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(parse_int(item, section + "." + key));
        return out;
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        sections[section][key] = value;
    }

    std::string to_text() const {
        std::ostringstream os;
        bool first = true;
        for (const auto& [name, kv] : sections) {
            if (!first) os << "\n";
            first = false;
            os << "[" << name << "]\n";
            for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
        }
        return os.str();
    }

  private:
    static int parse_int(const std::string& v, const std::string& where) {
        try {
            std::size_t used = 0;
            const int x = std::stoi(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: " + where + " is not an integer");
        }
    }
};

inline Config parse_config(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        std::size_t end = line.find_last_not_of(" \t\r");
        std::string s = line.substr(begin, end - begin + 1);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(line_no) + ": unclosed section");
            section = s.substr(1, s.size() - 2);
            cfg.sections[section];
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos || section.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value' inside a [section]");
        auto trim = [](std::string t) {
            const std::size_t b = t.find_first_not_of(" \t");
            const std::size_t e = t.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
        };
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        cfg.sections[section][key] = value;
    }
    return cfg;
}

/// Schema check; `manifest`/`artifacts` sections are reserved for manifests
/// and accepted here so a manifest can replay as a config.
inline void validate_config(const Config& cfg) {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"model",
         {"type", "image_qubits", "layers", "guided", "reuploads", "classes", "ancilla", "ladder",
          "conv_layers", "kernel"}},
        {"schedule", {"tau", "beta_start", "beta_end", "target"}},
        {"data", {"source", "classes", "image_size", "count", "images", "labels", "batch"}},
        {"optimizer", {"lr", "batch_size", "epochs", "gradient"}},
        {"run",
         {"seed", "samples", "label", "scale", "mask", "reset_each_step", "shots", "checkpoint",
          "unitary", "eval_samples", "eval_reference", "eval_normalize", "feature_dim", "inpaint_count"}},
        {"manifest", {"command", "seed", "out_dir", "params_hash"}},
        {"artifacts", {}},
    };
    for (const auto& [name, kv] : cfg.sections) {
        const auto it = schema.find(name);
        if (it == schema.end()) throw std::invalid_argument("config: unknown section [" + name + "]");
        if (name == "artifacts") continue;  // artifact names are free-form
        for (const auto& [k, v] : kv)
            if (!it->second.count(k))
                throw std::invalid_argument("config: unknown key " + name + "." + k);
    }
}

// ---------------------------------------------------------------------------
// Presets: one per in-scope hyperparameter-table row, plus synthetic-data
// variants that run without downloaded datasets.

inline const std::map<std::string, std::string>& preset_table() {
    auto make = [](const std::string& model, const std::string& schedule, const std::string& data,
                   const std::string& optimizer, const std::string& run) {
        return "[model]\n" + model + "\n[schedule]\n" + schedule + "\n[data]\n" + data +
               "\n[optimizer]\n" + optimizer + "\n[run]\n" + run + "\n";
    };
    static const std::map<std::string, std::string> table = [&] {
        std::map<std::string, std::string> t;
        const std::string sched_data = "tau = 10\nbeta_start = 0.05\nbeta_end = 0.5\ntarget = data";
        const std::string sched_noise = "tau = 10\nbeta_start = 0.05\nbeta_end = 0.5\ntarget = noise";
        const std::string mnist8 =
            "source = idx\nimages = train-images-idx3-ubyte\nlabels = train-labels-idx1-ubyte\n"
            "image_size = 8\nclasses = 0,1\ncount = 512";
        const std::string mnist28 =
            "source = idx\nimages = train-images-idx3-ubyte\nlabels = train-labels-idx1-ubyte\n"
            "image_size = 28\nclasses = 0,1\ncount = 512";
        const std::string mnist32 =
            "source = idx\nimages = train-images-idx3-ubyte\nlabels = train-labels-idx1-ubyte\n"
            "image_size = 32\nclasses = 0,1\ncount = 512";
        const std::string fashion32 =
            "source = idx\nimages = fashion-train-images-idx3-ubyte\nlabels = fashion-train-labels-idx1-ubyte\n"
            "image_size = 32\nclasses = 0,1\ncount = 512";
        const std::string synth8 = "source = synthetic\nimage_size = 8\nclasses = 0,1\ncount = 64";
        auto opt = [](double lr, int batch, int epochs) {
            std::ostringstream os;
            os << "lr = " << lr << "\nbatch_size = " << batch << "\nepochs = " << epochs
               << "\ngradient = adjoint";
            return os.str();
        };
        const std::string run8 = "seed = 1\nsamples = 8\nscale = 8";
        auto qdense = [](int qubits, int layers, bool guided, int reups) {
            std::ostringstream os;
            os << "type = qdense\nimage_qubits = " << qubits << "\nlayers = " << layers
               << "\nguided = " << (guided ? "true" : "false") << "\nreuploads = " << reups
               << "\nclasses = 2";
            return os.str();
        };
        auto qunet = [](const std::string& ladder, int conv_layers, bool guided) {
            std::ostringstream os;
            os << "type = qunet\nladder = " << ladder << "\nconv_layers = " << conv_layers
               << "\nkernel = 3\nguided = " << (guided ? "true" : "false") << "\nclasses = 2";
            return os.str();
        };
        auto uss = [](int qubits, int layers, bool ancilla, bool guided, int reups) {
            std::ostringstream os;
            os << "type = uss\nimage_qubits = " << qubits << "\nlayers = " << layers
               << "\nancilla = " << (ancilla ? "true" : "false")
               << "\nguided = " << (guided ? "true" : "false") << "\nreuploads = " << reups
               << "\nclasses = 2";
            return os.str();
        };

        // MNIST digits 8x8, guided, data target
        t["qdense-mnist8-guided"] = make(qdense(6, 47, true, 0), sched_data, mnist8, opt(0.00097, 20, 30), run8);
        t["qdense-mnist8-guided-reup3"] =
            make(qdense(6, 47, true, 3), sched_data, mnist8, opt(0.00360, 20, 30), run8);
        t["qdense-mnist8-guided-reup5"] =
            make(qdense(6, 47, true, 5), sched_data, mnist8, opt(0.00345, 20, 30), run8);
        t["qdense-mnist8-guided-reup7"] =
            make(qdense(6, 47, true, 7), sched_data, mnist8, opt(0.00362, 20, 30), run8);
        // MNIST digits 8x8, unguided
        t["qdense-mnist8-unguided"] = make(qdense(6, 50, false, 0), sched_data, mnist8, opt(0.00065, 20, 30), run8);
        t["qunet-mnist8-8l"] = make(qunet("2,4,8", 8, false), sched_data, mnist8, opt(0.00023, 10, 30), run8);
        t["qunet-mnist8-12l"] = make(qunet("2,4,8", 12, false), sched_data, mnist8, opt(0.00815, 10, 30), run8);
        // MNIST digits 8x8, noise target
        t["qdense-mnist8-noise"] = make(qdense(6, 55, false, 0), sched_noise, mnist8, opt(0.00160, 20, 30), run8);
        t["qunet-mnist8-noise-8l"] =
            make(qunet("2,4,8", 8, false), sched_noise, mnist8, opt(0.00113, 10, 30), run8);
        t["qunet-mnist8-noise-12l"] =
            make(qunet("2,4,8", 12, false), sched_noise, mnist8, opt(0.00912, 10, 30), run8);
        // MNIST 28x28, guided, noise target
        t["qdense-mnist28-noise-30l"] =
            make(qdense(10, 30, true, 0), sched_noise, mnist28, opt(0.00409, 20, 30), run8);
        t["qdense-mnist28-noise-60l"] =
            make(qdense(10, 60, true, 0), sched_noise, mnist28, opt(0.00211, 20, 30), run8);
        t["qunet-mnist28-noise-9l"] =
            make(qunet("2,4,8", 9, true), sched_noise, mnist28, opt(0.00287, 10, 30), run8);
        t["qunet-mnist28-noise-19l"] =
            make(qunet("2,4,8", 19, true), sched_noise, mnist28, opt(0.01479, 10, 30), run8);
        // Fashion (32x32), guided, noise target
        t["qdense-fashion-121l"] =
            make(qdense(10, 121, true, 0), sched_noise, fashion32, opt(0.00014, 20, 30), run8);
        t["qdense-fashion-60l"] =
            make(qdense(10, 60, true, 0), sched_noise, fashion32, opt(0.00723, 20, 30), run8);
        t["qunet-fashion-8l"] =
            make(qunet("3,6,12", 8, true), sched_noise, fashion32, opt(0.00051, 10, 30), run8);
        t["qunet-fashion-12l"] =
            make(qunet("3,6,12", 12, true), sched_noise, fashion32, opt(0.00029, 10, 30), run8);
        // Unitary single sampling, MNIST digits 8x8
        t["uss-mnist8-56l"] = make(uss(6, 56, false, false, 0), sched_data, mnist8, opt(0.00172, 20, 10), run8);
        t["uss-mnist8-55l"] = make(uss(6, 55, false, false, 0), sched_data, mnist8, opt(0.00172, 20, 10), run8);
        t["uss-mnist8-111l"] = make(uss(6, 111, false, false, 0), sched_data, mnist8, opt(0.00419, 20, 10), run8);
        t["uss-mnist8-555l"] = make(uss(6, 555, false, false, 0), sched_data, mnist8, opt(0.00002, 20, 10), run8);
        t["uss-mnist8-47l-anc"] = make(uss(6, 47, true, false, 0), sched_data, mnist8, opt(0.00322, 20, 10), run8);
        t["uss-mnist8-95l-anc"] = make(uss(6, 95, true, false, 0), sched_data, mnist8, opt(0.00104, 20, 10), run8);
        t["uss-mnist8-476l-anc"] =
            make(uss(6, 476, true, false, 0), sched_data, mnist8, opt(0.00012, 20, 10), run8);
        t["uss-mnist8-guided-47l"] =
            make(uss(6, 47, false, true, 0), sched_data, mnist8, opt(0.00721, 20, 10), run8);
        t["uss-mnist8-guided-47l-reup10"] =
            make(uss(6, 47, false, true, 10), sched_data, mnist8, opt(0.00220, 20, 10), run8);
        t["uss-mnist8-guided-95l"] =
            make(uss(6, 95, false, true, 0), sched_data, mnist8, opt(0.00099, 20, 10), run8);
        t["uss-mnist8-guided-476l"] =
            make(uss(6, 476, false, true, 0), sched_data, mnist8, opt(0.00022, 20, 10), run8);
        t["uss-mnist8-guided-476l-reup10"] =
            make(uss(6, 476, false, true, 10), sched_data, mnist8, opt(0.00016, 20, 10), run8);
        // Unitary single sampling, MNIST digits 32x32 (10 image qubits)
        t["uss-mnist32-66l"] = make(uss(10, 66, false, false, 0), sched_data, mnist32, opt(0.00212, 20, 10), run8);
        t["uss-mnist32-133l"] =
            make(uss(10, 133, false, false, 0), sched_data, mnist32, opt(0.00190, 20, 10), run8);
        // Synthetic-data variants (no dataset files required)
        t["qdense-synthetic-smoke"] =
            make(qdense(6, 47, true, 0), sched_data, synth8, opt(0.00097, 20, 30), run8);
        t["qdense-synthetic-tiny"] =
            make(qdense(4, 4, true, 0), sched_data,
                 "source = synthetic\nimage_size = 4\nclasses = 0,1\ncount = 8", opt(0.005, 8, 2),
                 "seed = 1\nsamples = 2\nscale = 8");
        t["uss-synthetic-tiny"] =
            make(uss(4, 3, false, false, 0),
                 "tau = 3\nbeta_start = 0.05\nbeta_end = 0.5\ntarget = data",
                 "source = synthetic\nimage_size = 4\nclasses = 0,1\ncount = 6", opt(0.005, 6, 2),
                 "seed = 1\nsamples = 2\nscale = 8");
        return t;
    }();
    return table;
}

inline Config load_preset(const std::string& name) {
    const auto& table = preset_table();
    const auto it = table.find(name);
    if (it == table.end()) {
        std::string names;
        for (const auto& [k, v] : table) names += (names.empty() ? "" : ", ") + k;
        throw std::invalid_argument("unknown preset '" + name + "'; available: " + names);
    }
    Config cfg = parse_config(it->second);
    validate_config(cfg);
    return cfg;
}

}  // namespace qdd
