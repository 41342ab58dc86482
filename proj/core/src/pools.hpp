#pragma once

#include <array>
#include <string_view>

// Built-in surrogate pools shared by the synthetic corpus generator and the
// surrogate replacement step. All values are fabricated; none correspond to
// real persons, places or records.
namespace deid::pools {

inline constexpr std::array<std::string_view, 16> kFirstNames = {
    "Joshua", "Amelia", "Marcus",  "Priya",  "Daniel", "Sofia",  "Victor", "Hannah",
    "Elena",  "Tobias", "Ingrid",  "Rafael", "Nadia",  "Connor", "José",   "Renée",
};

inline constexpr std::array<std::string_view, 16> kLastNames = {
    "Howard",  "Bennett", "Okafor", "Lindgren", "Marsh",   "Delgado", "Whitaker", "Pham",
    "Castillo", "Reyes",  "Novak",  "Fleming",  "Ibrahim", "Sato",    "Muñoz",    "Keller",
};

inline constexpr std::array<std::string_view, 10> kStreetNames = {
    "Longview", "Maple",  "Harrison", "Cedar",  "Willow",
    "Granite",  "Sunset", "Dover",    "Linden", "Prospect",
};

inline constexpr std::array<std::string_view, 6> kStreetSuffixes = {
    "Drive", "Avenue", "Street", "Road", "Lane", "Court",
};

inline constexpr std::array<std::string_view, 8> kFacilities = {
    "Lakeside Memorial Hospital", "Northgate Clinic",     "St. Aurelia Medical Center",
    "Riverbend Community Hospital", "Hillcrest Infirmary", "Westfield Health Center",
    "Oakdale General Hospital",   "Pinewood Clinic",
};

inline constexpr std::array<std::string_view, 12> kProfessions = {
    "manager",   "carpenter", "accountant", "librarian", "electrician", "farmer",
    "pilot",     "chef",      "plumber",    "cashier",   "welder",      "tailor",
};

inline constexpr std::array<std::string_view, 8> kEmailUsers = {
    "j.howard", "m.bennett", "l.okafor", "r.delgado",
    "k.novak",  "t.fleming", "s.reyes",  "a.pham",
};

inline constexpr std::string_view kEmailDomain = "example.org";

}  // namespace deid::pools
