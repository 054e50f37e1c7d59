#pragma once

// Binary archives (bit-exact round trip) and plot-ready CSV for fronts and
// projected systems.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "frontstab/front1d.hpp"
#include "frontstab/front2d.hpp"
#include "frontstab/projection.hpp"

namespace frontstab::io {

/// Unreadable, truncated or inconsistent archive; the message names the check.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void save_front(const std::string& path, const FrontProfile1D& front);
void save_front(const std::string& path, const FrontProfile2D& front);
void save_projected(const std::string& path, const ProjectedSystem& sys);

/// Loading validates the profile invariants (without the residual check).
FrontProfile1D load_front1d(const std::string& path);
FrontProfile2D load_front2d(const std::string& path);
ProjectedSystem load_projected(const std::string& path);

enum class ArchiveKind { Front1D, Front2D, Projected };

/// Reads the magic of an archive without loading it.
ArchiveKind archive_kind(const std::string& path);

/// Columns x, field names...; leading comment lines hold `comment` (when not
/// empty) and then c and delta.
void write_front_csv(const std::string& path, const FrontProfile1D& front, const std::string& comment = "");
/// Columns x, y, field names...
void write_front_csv(const std::string& path, const FrontProfile2D& front, const std::string& comment = "");

/// Nine significant digits, the CSV convention.
std::string num(double v);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string content_hash(const std::string& text);

}  // namespace frontstab::io
