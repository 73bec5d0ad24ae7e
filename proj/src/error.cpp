#include "classilist/error.hpp"

namespace classilist {

std::string Issue::to_string() const {
    std::string out = file.empty() ? std::string("<input>") : file;
    if (line != 0) out += ":" + std::to_string(line);
    out += ": ";
    out += message;
    return out;
}

namespace {

std::string summarize(const std::vector<Issue>& issues) {
    if (issues.empty()) return "load failed";
    std::string msg = issues.front().to_string();
    if (issues.size() > 1) msg += " (and " + std::to_string(issues.size() - 1) + " more)";
    return msg;
}

}  // namespace

LoadError::LoadError(std::vector<Issue> issues)
    : Error(summarize(issues)), issues_(std::move(issues)) {}

}  // namespace classilist
