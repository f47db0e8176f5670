//! The fixed set of chest radiograph observations the labeler reports on.

use std::fmt;
use std::str::FromStr;

/// One of the 14 labeled observations.
///
/// Variant order is the column order of every labels CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observation {
    NoFinding,
    EnlargedCardiomediastinum,
    Cardiomegaly,
    LungLesion,
    LungOpacity,
    Edema,
    Consolidation,
    Pneumonia,
    Atelectasis,
    Pneumothorax,
    PleuralEffusion,
    PleuralOther,
    Fracture,
    SupportDevices,
}

impl Observation {
    pub const COUNT: usize = 14;

    pub const ALL: [Observation; Self::COUNT] = [
        Observation::NoFinding,
        Observation::EnlargedCardiomediastinum,
        Observation::Cardiomegaly,
        Observation::LungLesion,
        Observation::LungOpacity,
        Observation::Edema,
        Observation::Consolidation,
        Observation::Pneumonia,
        Observation::Atelectasis,
        Observation::Pneumothorax,
        Observation::PleuralEffusion,
        Observation::PleuralOther,
        Observation::Fracture,
        Observation::SupportDevices,
    ];

    /// Every observation except the derived `No Finding`, i.e. the ones that
    /// are found by phrase matching.
    pub fn mentionable() -> impl Iterator<Item = Observation> {
        Self::ALL.into_iter().filter(|o| !o.is_derived())
    }

    pub fn name(self) -> &'static str {
        match self {
            Observation::NoFinding => "No Finding",
            Observation::EnlargedCardiomediastinum => "Enlarged Cardiomediastinum",
            Observation::Cardiomegaly => "Cardiomegaly",
            Observation::LungLesion => "Lung Lesion",
            Observation::LungOpacity => "Lung Opacity",
            Observation::Edema => "Edema",
            Observation::Consolidation => "Consolidation",
            Observation::Pneumonia => "Pneumonia",
            Observation::Atelectasis => "Atelectasis",
            Observation::Pneumothorax => "Pneumothorax",
            Observation::PleuralEffusion => "Pleural Effusion",
            Observation::PleuralOther => "Pleural Other",
            Observation::Fracture => "Fracture",
            Observation::SupportDevices => "Support Devices",
        }
    }

    /// File stem used for this observation's phrase list, e.g. `pleural_effusion`.
    pub fn slug(self) -> &'static str {
        match self {
            Observation::NoFinding => "no_finding",
            Observation::EnlargedCardiomediastinum => "enlarged_cardiomediastinum",
            Observation::Cardiomegaly => "cardiomegaly",
            Observation::LungLesion => "lung_lesion",
            Observation::LungOpacity => "lung_opacity",
            Observation::Edema => "edema",
            Observation::Consolidation => "consolidation",
            Observation::Pneumonia => "pneumonia",
            Observation::Atelectasis => "atelectasis",
            Observation::Pneumothorax => "pneumothorax",
            Observation::PleuralEffusion => "pleural_effusion",
            Observation::PleuralOther => "pleural_other",
            Observation::Fracture => "fracture",
            Observation::SupportDevices => "support_devices",
        }
    }

    pub fn from_slug(slug: &str) -> Option<Observation> {
        Self::ALL.into_iter().find(|o| o.slug() == slug)
    }

    /// True for the 12 pathologies; false for `Support Devices` and `No Finding`.
    pub fn is_pathology(self) -> bool {
        !matches!(self, Observation::NoFinding | Observation::SupportDevices)
    }

    /// `No Finding` is computed from the other labels, never matched directly.
    pub fn is_derived(self) -> bool {
        self == Observation::NoFinding
    }

    /// Position of this observation in [`Observation::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown observation name {0:?}")]
pub struct UnknownObservation(pub String);

impl FromStr for Observation {
    type Err = UnknownObservation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| UnknownObservation(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourteen_observations_in_csv_order() {
        assert_eq!(Observation::ALL.len(), 14);
        for (i, o) in Observation::ALL.iter().enumerate() {
            assert_eq!(o.index(), i);
        }
        assert_eq!(Observation::ALL[0].name(), "No Finding");
        assert_eq!(Observation::ALL[13].name(), "Support Devices");
    }

    #[test]
    fn twelve_pathologies() {
        let n = Observation::ALL.iter().filter(|o| o.is_pathology()).count();
        assert_eq!(n, 12);
        assert!(Observation::Fracture.is_pathology());
        assert!(!Observation::SupportDevices.is_pathology());
    }

    #[test]
    fn names_and_slugs_round_trip() {
        for o in Observation::ALL {
            assert_eq!(o.name().parse::<Observation>().unwrap(), o);
            assert_eq!(Observation::from_slug(o.slug()), Some(o));
        }
        assert!(Observation::from_slug("banana").is_none());
        assert_eq!(Observation::mentionable().count(), 13);
    }
}
