#pragma once

#include <cmath>
#include <string>

#include "greenval/io.hpp"

namespace testsupport {

inline std::string data_path(const std::string& file) { return std::string(GREENVAL_DATA_DIR) + "/" + file; }

inline const greenval::CaseStudyDocument& sicily() {
    static const auto doc = greenval::load_case_study_file(data_path("sicily.json"));
    return doc;
}

inline const greenval::CaseStudyDocument& emilia() {
    static const auto doc = greenval::load_case_study_file(data_path("emilia-romagna.json"));
    return doc;
}

// Reference arithmetic kept deliberately naive: repeated division instead of pow.
inline double discount_by_loop(double amount, double rate, int years) {
    for (int i = 0; i < years; ++i) amount /= 1.0 + rate;
    return amount;
}

inline double round_cents(double v) { return std::round(v * 100.0) / 100.0; }

inline greenval::ItemSpec spec(std::string id, greenval::ItemKind kind, double raw,
                               greenval::TimingProfile timing = greenval::RecurringImmediate{}) {
    greenval::ItemSpec s;
    s.id = std::move(id);
    s.kind = kind;
    s.category = kind == greenval::ItemKind::cost ? "OPEX" : "MARKET";
    s.raw_amount = raw;
    s.timing = timing;
    return s;
}

}  // namespace testsupport
