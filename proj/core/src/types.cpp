#include "deid/types.hpp"

namespace deid {

std::string_view to_string(PhiCategory category) {
    switch (category) {
        case PhiCategory::Name: return "NAME";
        case PhiCategory::Profession: return "PROFESSION";
        case PhiCategory::Location: return "LOCATION";
        case PhiCategory::Age: return "AGE";
        case PhiCategory::Date: return "DATE";
        case PhiCategory::Contact: return "CONTACT";
        case PhiCategory::Id: return "ID";
        case PhiCategory::Others: return "OTHERS";
    }
    return "OTHERS";
}

std::optional<PhiCategory> phi_category_from_string(std::string_view name) {
    if (name == "NAME") return PhiCategory::Name;
    if (name == "PROFESSION") return PhiCategory::Profession;
    if (name == "LOCATION") return PhiCategory::Location;
    if (name == "AGE") return PhiCategory::Age;
    if (name == "DATE") return PhiCategory::Date;
    if (name == "CONTACT") return PhiCategory::Contact;
    if (name == "ID") return PhiCategory::Id;
    if (name == "OTHERS") return PhiCategory::Others;
    return std::nullopt;
}

std::string_view to_string(CorpusSource source) {
    switch (source) {
        case CorpusSource::I2b2Xml: return "I2B2_XML";
        case CorpusSource::Synthetic: return "SYNTHETIC";
    }
    return "I2B2_XML";
}

}  // namespace deid
