#pragma once

// Strict readers over the JSON run configuration. Every key a command reads is
// recorded, so a typo or a stale option is rejected before any computation.

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace frontstab::cli {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Section {
public:
    Section(const json& node, std::string path) : node_(&node), path_(std::move(path)) {
        if (!node_->is_object()) fail("", "must be an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_->contains(key); }
    [[nodiscard]] const std::string& path() const { return path_; }

    double number(const std::string& key, double fallback) {
        if (!take(key)) return fallback;
        const json& v = (*node_)[key];
        if (!v.is_number()) fail(key, "must be a number");
        return v.get<double>();
    }
    double required_number(const std::string& key) {
        if (!has(key)) fail(key, "is required");
        return number(key, 0.0);
    }
    double positive(const std::string& key, double fallback) {
        const double v = number(key, fallback);
        if (!(v > 0.0)) fail(key, "must be > 0");
        return v;
    }
    int integer(const std::string& key, int fallback) {
        if (!take(key)) return fallback;
        const json& v = (*node_)[key];
        if (!v.is_number_integer()) fail(key, "must be an integer");
        return v.get<int>();
    }
    int at_least(const std::string& key, int fallback, int lo) {
        const int v = integer(key, fallback);
        if (v < lo) fail(key, "must be >= " + std::to_string(lo));
        return v;
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!take(key)) return fallback;
        const json& v = (*node_)[key];
        if (!v.is_boolean()) fail(key, "must be true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& key, const std::string& fallback,
                       const std::vector<std::string>& allowed = {}) {
        if (!take(key)) return fallback;
        const json& v = (*node_)[key];
        if (!v.is_string()) fail(key, "must be a string");
        auto s = v.get<std::string>();
        if (!allowed.empty()) {
            bool ok = false;
            std::string list;
            for (const auto& a : allowed) {
                ok = ok || a == s;
                list += (list.empty() ? "" : ", ") + a;
            }
            if (!ok) fail(key, "must be one of {" + list + "}, got '" + s + "'");
        }
        return s;
    }
    /// Raw access for values with a command-specific shape; marks the key used.
    const json* raw(const std::string& key) {
        if (!take(key)) return nullptr;
        return &(*node_)[key];
    }
    Section section(const std::string& key) {
        static const json empty = json::object();
        if (!take(key)) return Section(empty, join(key));
        return Section((*node_)[key], join(key));
    }
    /// Rejects keys nobody asked for.
    void done() const {
        for (auto it = node_->begin(); it != node_->end(); ++it)
            if (!seen_.count(it.key())) fail(it.key(), "is not a recognised option");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError("config: '" + (key.empty() ? (path_.empty() ? std::string("<root>") : path_) : join(key)) +
                          "' " + what);
    }

private:
    bool take(const std::string& key) {
        seen_.insert(key);
        return node_->contains(key) && !(*node_)[key].is_null();
    }
    [[nodiscard]] std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* node_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace frontstab::cli
