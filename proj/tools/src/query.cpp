#include "pdgcli/query.hpp"

#include <stdexcept>

#include "pdgcli/format.hpp"

namespace pdgcli {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

pdg::Event parse_event(const std::string& text, const std::string& where) {
    pdg::Event ev;
    std::size_t start = 0;
    while (true) {
        auto comma = text.find(',', start);
        auto part = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        auto eq = part.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == part.size() || part.find('=', eq + 1) != std::string::npos)
            throw FormatError("query " + where + ": expected Var=val, got '" + part + "'");
        ev.emplace_back(trim(part.substr(0, eq)), trim(part.substr(eq + 1)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return ev;
}

std::string event_string(const pdg::Event& e) {
    std::string s;
    for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + e[i].first + "=" + e[i].second;
    return s;
}

}  // namespace

Query parse_query(const std::string& text) {
    auto bar = text.find('|');
    Query q;
    if (bar != std::string::npos && text.find('|', bar + 1) != std::string::npos)
        throw FormatError("query: more than one '|'");
    q.target = parse_event(text.substr(0, bar), "target");
    if (bar != std::string::npos) q.given = parse_event(text.substr(bar + 1), "condition");
    return q;
}

std::string to_string(const Query& q) {
    auto s = event_string(q.target);
    if (!q.given.empty()) s += "|" + event_string(q.given);
    return s;
}

}  // namespace pdgcli
