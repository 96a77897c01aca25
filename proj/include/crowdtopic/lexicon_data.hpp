#pragma once

// Built-in copies of data/stopwords.txt and data/noun_lexicon.txt.

#include <string_view>

namespace crowdtopic::textprep {

inline constexpr std::string_view kDefaultStopwords[] = {
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "even",
    "ever", "every", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her",
    "here", "hers", "herself", "him", "himself", "his", "how", "however", "if", "in", "into", "is",
    "it", "its", "itself", "just", "let", "may", "me", "might", "more", "most", "much", "must",
    "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other",
    "our", "ours", "ourselves", "out", "over", "own", "please", "same", "she", "should", "so",
    "some", "still", "such", "than", "that", "the", "their", "theirs", "them", "themselves", "then",
    "there", "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "us",
    "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why",
    "will", "with", "within", "without", "would", "yet", "you", "your", "yours", "yourself",
    "yourselves",
};

inline constexpr std::string_view kDefaultNounLexicon[] = {
    "12aa", "80g", "accident", "accidents", "admission", "ailment", "ailments", "ambulance",
    "amount", "appreciation", "arthritis", "baby", "beneficiary", "benefit", "benefits", "bill",
    "bills", "blood", "board", "bone", "brain", "cancer", "cancers", "cardiac", "care", "caregiver",
    "cause", "central", "certificate", "certificates", "chemotherapy", "child", "childhood",
    "children", "clinic", "cns", "condition", "cost", "costs", "daughter", "deduction",
    "dependence", "diabetes", "diagnosis", "dialysis", "disease", "diseases", "disorder", "doctor",
    "doctors", "donation", "donations", "donor", "donors", "elderly", "emergency", "exemption",
    "expenses", "facility", "family", "father", "fee", "fees", "fever", "fund", "funding",
    "fundraiser", "funds", "grandfather", "grandmother", "guest", "health", "heart", "honorary",
    "hospital", "hospitalization", "hospitals", "icu", "illness", "illnesses", "income",
    "induction", "infant", "infection", "injuries", "injury", "insulin", "kidney", "kidneys",
    "leukemia", "life", "liver", "lungs", "lymphoma", "lymphomas", "marrow", "medical", "medicine",
    "medicines", "member", "mother", "nervous", "nursing", "operation", "organ", "pain", "parent",
    "parents", "patient", "patients", "physiotherapy", "post", "recognition", "recovery",
    "reduction", "rehabilitation", "relief", "request", "section", "severe", "son", "stroke",
    "support", "surgeon", "surgery", "system", "tax", "terminal", "therapy", "transplant",
    "treatment", "treatments", "tumor", "tumors", "urgent", "ventilator", "voluntary",
};

} // namespace crowdtopic::textprep
