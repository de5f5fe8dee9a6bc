#ifndef VTRAJ_TEST_TREE_HPP
#define VTRAJ_TEST_TREE_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace tree {

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Every regular file under `root`, keyed by its relative path.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[std::filesystem::relative(e.path(), root).generic_string()] = slurp(e.path());
        }
    }
    return out;
}

/// First differing relative path, or empty when the trees match byte for byte.
inline std::string first_difference(const std::map<std::string, std::string>& a,
                                    const std::map<std::string, std::string>& b) {
    for (const auto& [k, v] : a) {
        const auto it = b.find(k);
        if (it == b.end() || it->second != v) {
            return k;
        }
    }
    for (const auto& [k, v] : b) {
        if (!a.contains(k)) {
            return k;
        }
    }
    return {};
}

/// Runs the CLI with the given arguments; returns the exit status.
inline int run_cli(const std::string& args) {
    const std::string cmd = std::string(VTRAJ_CLI) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

} // namespace tree

#endif // VTRAJ_TEST_TREE_HPP
