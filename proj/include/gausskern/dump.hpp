#ifndef GAUSSKERN_DUMP_HPP
#define GAUSSKERN_DUMP_HPP

#include <iosfwd>
#include <string>

#include <gausskern/gaussalg.hpp>

namespace gausskern {

// One JSON object per line and per term.
std::string term_to_json(const Term& t);
Term term_from_json(const std::string& line);

void write_expansion(std::ostream& os, const Expansion& e);
Expansion read_expansion(std::istream& is, int degree_cap = 4);

void save_expansion(const std::string& path, const Expansion& e);
Expansion load_expansion(const std::string& path, int degree_cap = 4);

} // namespace gausskern

#endif
