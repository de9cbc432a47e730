#include "ecx/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "ecx/csv.hpp"
#include "ecx/error.hpp"
#include "ecx/panel.hpp"

namespace ecx {

void write_trajectories_csv(const TrajectorySet& set, std::ostream& out) {
    std::map<std::pair<std::size_t, int>, double> h;
    for (const auto& s : set.scalars) h[{s.entity, s.year}] = s.value;
    out << "entity,year,x,y,h\n";
    for (const auto& p : set.points) {
        out << set.entities.at(p.entity) << ',' << p.year << ',' << format_double(p.x) << ',' << format_double(p.y)
            << ',';
        if (auto it = h.find({p.entity, p.year}); it != h.end()) out << format_double(it->second);
        out << '\n';
    }
}

TrajectorySet parse_trajectories_csv(std::istream& in, const std::string& source) {
    CsvReader reader(in, source);
    reader.expect_header({"entity", "year", "x", "y", "h"});
    TrajectorySet set;
    std::map<std::string, std::size_t> ids;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        const auto line = reader.line();
        if (fields.size() == 4) fields.emplace_back();
        reader.require_fields(fields, 5);
        auto [it, fresh] = ids.emplace(fields[0], set.entities.size());
        if (fresh) set.entities.push_back(fields[0]);
        PlanePoint p{it->second, parse_int(fields[1], source, line), parse_number(fields[2], source, line),
                     parse_number(fields[3], source, line)};
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw ValidationError(source + ":" + std::to_string(line) + ": non-finite coordinate");
        set.points.push_back(p);
        if (!fields[4].empty()) set.scalars.push_back({p.entity, p.year, parse_number(fields[4], source, line)});
    }
    return set;
}

TrajectorySet load_trajectories_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trajectory file: " + path.string());
    return parse_trajectories_csv(in, path.string());
}

}  // namespace ecx
