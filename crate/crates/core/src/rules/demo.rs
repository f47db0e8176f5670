//! The bundled demonstration rule set (`demo/` in the crate root).

use super::{parse_phrase_str, parse_rule_str, Phase, RuleSet};
use crate::observation::Observation;

macro_rules! demo_file {
    ($path:literal) => {
        ($path, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/demo/", $path)))
    };
}

const PHRASE_FILES: [(&str, &str); 13] = [
    demo_file!("phrases/enlarged_cardiomediastinum.txt"),
    demo_file!("phrases/cardiomegaly.txt"),
    demo_file!("phrases/lung_lesion.txt"),
    demo_file!("phrases/lung_opacity.txt"),
    demo_file!("phrases/edema.txt"),
    demo_file!("phrases/consolidation.txt"),
    demo_file!("phrases/pneumonia.txt"),
    demo_file!("phrases/atelectasis.txt"),
    demo_file!("phrases/pneumothorax.txt"),
    demo_file!("phrases/pleural_effusion.txt"),
    demo_file!("phrases/pleural_other.txt"),
    demo_file!("phrases/fracture.txt"),
    demo_file!("phrases/support_devices.txt"),
];

const RULE_FILES: [(Phase, (&str, &str)); 3] = [
    (Phase::PreNegationUncertainty, demo_file!("rules/pre_negation_uncertainty.rules")),
    (Phase::Negation, demo_file!("rules/negation.rules")),
    (Phase::PostNegationUncertainty, demo_file!("rules/post_negation_uncertainty.rules")),
];

pub(super) fn rule_set() -> RuleSet {
    let mut phrases = Vec::new();
    for (path, text) in PHRASE_FILES {
        let slug = path.trim_start_matches("phrases/").trim_end_matches(".txt");
        let obs = Observation::from_slug(slug).expect("demo phrase file slug");
        phrases.extend(parse_phrase_str(obs, text, path).expect("demo phrases parse"));
    }
    let mut rules = Vec::new();
    for (phase, (path, text)) in RULE_FILES {
        rules.extend(parse_rule_str(text, phase, path).expect("demo rules parse"));
    }
    RuleSet::new(phrases, rules)
}
