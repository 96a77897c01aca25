#pragma once

// Default domain seeds: unigrams of the headline topic terms for medical
// charity campaigns. "health" occurs in both campaign topics and is left out,
// since a term may seed only one topic.

#include "crowdtopic/topicmodel.hpp"

namespace crowdtopic::topics {

/// Topic 0: child health and terminal illness. Topic 1: urgent elderly care.
inline SeedSpec default_campaign_seeds() {
    return {{
        {"child", "cancer", "terminal", "disease", "leukemia", "central", "nervous", "system", "cns", "tumors",
         "lymphomas", "severe", "illness", "parent", "dependence"},
        {"elderly", "nursing", "facility", "kidney", "dialysis", "diabetes", "heart", "stroke", "urgent", "funds",
         "hospitalization", "arthritis", "physiotherapy"},
    }};
}

/// Topic 0: tax benefits. Topic 1: recognition and appreciation.
inline SeedSpec default_incentive_seeds() {
    return {{
        {"tax", "benefit", "benefits", "reduction", "income", "section", "80g", "medical", "relief", "12aa"},
        {"appreciation", "post", "certificate", "donation", "recognition", "voluntary", "board", "member", "request",
         "guest", "induction", "honorary"},
    }};
}

} // namespace crowdtopic::topics
