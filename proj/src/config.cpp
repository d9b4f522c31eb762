#include "lipsysid/config.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace lipsysid {

namespace {
std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}
}  // namespace

std::map<std::string, std::string> load_key_value_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line, section;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("bad config line (expected key = value): " + line);
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void write_key_value_file(const std::map<std::string, std::string>& kv, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write config file: " + path);
    for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
}

}  // namespace lipsysid
