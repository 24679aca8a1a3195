use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{open, IngestError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Upper,
    Lower,
    Whole,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Upper => "upper",
            Zone::Lower => "lower",
            Zone::Whole => "whole",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub name: String,
    pub zone: Zone,
}

/// Mapping from raw catalog category ids to named categories grouped by body zone.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Taxonomy {
    entries: BTreeMap<u64, TaxonomyEntry>,
}

impl Taxonomy {
    /// Several raw ids may map onto the same (zone, name) category; a category
    /// is identified by that pair, so names only need to be unique per zone.
    pub fn new(entries: BTreeMap<u64, TaxonomyEntry>) -> Result<Self> {
        for (raw, entry) in &entries {
            if entry.name.trim().is_empty() {
                return Err(IngestError::Taxonomy(format!("cat_id {raw}: empty category name")));
            }
        }
        Ok(Taxonomy { entries })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, TaxonomyEntry> =
            serde_json::from_str(text).map_err(|e| IngestError::Taxonomy(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (key, entry) in raw {
            let id: u64 = key
                .parse()
                .map_err(|_| IngestError::Taxonomy(format!("key `{key}` is not a non-negative integer")))?;
            if entries.insert(id, entry).is_some() {
                return Err(IngestError::Taxonomy(format!("cat_id {id} listed twice")));
            }
        }
        Taxonomy::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        std::io::Read::read_to_string(&mut open(path)?, &mut text).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Taxonomy::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let raw: BTreeMap<String, &TaxonomyEntry> = self.entries.iter().map(|(k, v)| (k.to_string(), v)).collect();
        serde_json::to_string_pretty(&raw).expect("taxonomy serializes")
    }

    pub fn get(&self, raw_cat_id: u64) -> Option<&TaxonomyEntry> {
        self.entries.get(&raw_cat_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &TaxonomyEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    /// A default clothing catalog, grouped by body zone,
    /// assigned consecutive raw ids starting at 1.
    pub fn clothing_default() -> Self {
        const UPPER: &[&str] = &[
            "Coat",
            "T-shirt",
            "Shirt",
            "Spaghette",
            "Smock",
            "Tank",
            "Sweater",
            "Collar",
            "Underwear",
            "Sport",
            "Winter",
            "Raincoat",
            "Leather",
            "Suit",
            "Trench",
            "Furs",
        ];
        const LOWER: &[&str] = &[
            "Pants",
            "Legging",
            "Skirt",
            "Bloomers",
            "Wedding",
            "Jeans",
            "Briefs",
            "Silk",
            "Short",
            "Casual Shoes",
            "Rainy Shoes",
            "Sports Shoes",
            "Boots",
            "Slipper",
        ];
        const WHOLE: &[&str] = &[
            "Suit",
            "Pajamas",
            "Sport",
            "Sun Protection",
            "Uniform",
            "Wedding",
            "Chenogsum",
            "Dress",
            "Work (Server)",
            "Work (Doctor)",
            "Activewear (Cheer)",
            "Activewear (Performance)",
        ];
        let mut entries = BTreeMap::new();
        let mut id = 1u64;
        for (zone, names) in [(Zone::Upper, UPPER), (Zone::Lower, LOWER), (Zone::Whole, WHOLE)] {
            for name in names {
                entries.insert(
                    id,
                    TaxonomyEntry {
                        name: (*name).to_string(),
                        zone,
                    },
                );
                id += 1;
            }
        }
        Taxonomy { entries }
    }
}
