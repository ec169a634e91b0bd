//! On-disk variant libraries: the serialized form of a Pareto front, the
//! interchange format between `gen-multipliers` and the evaluation and
//! optimization stages.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accuracy::{accuracy_drop, AccuracyModel};
use crate::approxmul::metrics::ErrorMetrics;
use crate::approxmul::netlist::Netlist;
use crate::approxmul::search::{MultiplierVariant, Provenance};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRecord {
    /// Stable identifier: `exact` for the zero-error design, else `vNNN`
    /// in descending-area order.
    pub id: String,
    pub area: f64,
    pub error: ErrorMetrics,
    pub provenance: Provenance,
    /// Netlist in the standard text format; the library is self-contained.
    pub netlist: String,
}

impl VariantRecord {
    pub fn is_exact(&self) -> bool {
        self.error.is_exact()
    }

    pub fn parse_netlist(&self) -> Result<Netlist> {
        Netlist::from_text(&self.netlist)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantLibrary {
    pub bitwidth: u32,
    pub variants: Vec<VariantRecord>,
}

impl VariantLibrary {
    pub fn from_front(bitwidth: u32, front: &[MultiplierVariant]) -> Self {
        let variants = front
            .iter()
            .enumerate()
            .map(|(idx, v)| VariantRecord {
                id: if v.is_exact() { "exact".to_string() } else { format!("v{idx:03}") },
                area: v.area,
                error: v.error,
                provenance: v.provenance.clone(),
                netlist: v.netlist.to_text(),
            })
            .collect();
        VariantLibrary { bitwidth, variants }
    }

    pub fn find(&self, id: &str) -> Result<&VariantRecord> {
        self.variants
            .iter()
            .find(|v| v.id == id)
            .ok_or_else(|| Error::Lookup(format!("variant {id:?} not found in library")))
    }

    pub fn exact(&self) -> Result<&VariantRecord> {
        self.variants
            .iter()
            .find(|v| v.is_exact())
            .ok_or_else(|| Error::Lookup("library has no exact variant".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("variant library is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for record in &self.variants {
            if !seen.insert(record.id.as_str()) {
                return Err(Error::Config(format!("duplicate variant id {:?}", record.id)));
            }
            let netlist = record.parse_netlist()?;
            if netlist.bitwidth() != self.bitwidth {
                return Err(Error::Config(format!(
                    "variant {:?} has bitwidth {}, library says {}",
                    record.id,
                    netlist.bitwidth(),
                    self.bitwidth
                )));
            }
            if !(record.area.is_finite() && record.area >= 0.0) {
                return Err(Error::Config(format!("variant {:?} has invalid area", record.id)));
            }
        }
        self.exact()?;
        Ok(())
    }
}

/// Envelope stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LibraryFile {
    manifest: RunManifest,
    library: VariantLibrary,
}

pub fn write_library(
    path: &Path,
    manifest: &RunManifest,
    library: &VariantLibrary,
) -> Result<()> {
    let file = LibraryFile { manifest: manifest.clone(), library: library.clone() };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Parse(format!("serializing library: {e}")))?;
    fs::write(path, json.as_bytes()).map_err(Error::Io)?;
    Ok(())
}

pub fn load_library(path: &Path) -> Result<(RunManifest, VariantLibrary)> {
    let text = fs::read_to_string(path).map_err(Error::Io)?;
    let file: LibraryFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    file.library.validate()?;
    Ok((file.manifest, file.library))
}

/// Keeps the variants whose estimated accuracy drop on `network` stays
/// within `max_drop` percentage points. Order is preserved. The exact
/// variant always survives (its drop is zero by definition).
pub fn filter_by_accuracy<F: Scalar>(
    variants: &[VariantRecord],
    model: &AccuracyModel<F>,
    network: &str,
    max_drop: F,
) -> Result<Vec<VariantRecord>> {
    if max_drop < F::zero() {
        return Err(Error::InvalidArgument(format!(
            "accuracy-drop threshold must be >= 0, got {max_drop}"
        )));
    }
    let mut kept = Vec::new();
    for record in variants {
        let drop = accuracy_drop(record, network, model)?;
        if drop <= max_drop {
            kept.push(record.clone());
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approxmul::netlist::{build_exact_multiplier, GateAreaTable};
    use crate::approxmul::search::{pareto_search, SearchParams};

    fn small_front() -> (u32, Vec<MultiplierVariant>) {
        let base = build_exact_multiplier(4).unwrap();
        let params = SearchParams {
            population: 12,
            generations: 6,
            crossover_p: 0.9,
            mutation_p: None,
            seed: 2,
        };
        let front = pareto_search(&base, &GateAreaTable::default(), &params).unwrap();
        (4, front)
    }

    #[test]
    fn library_round_trip_preserves_everything() {
        let (bitwidth, front) = small_front();
        let lib = VariantLibrary::from_front(bitwidth, &front);
        let manifest = RunManifest::new("gen-multipliers --bitwidth 4".into(), Some(2), vec![]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lib.json");
        write_library(&path, &manifest, &lib).unwrap();
        let (m2, lib2) = load_library(&path).unwrap();
        assert_eq!(manifest, m2);
        assert_eq!(lib, lib2);
        // Netlists survive the text round trip functionally.
        for (orig, rec) in front.iter().zip(&lib2.variants) {
            let parsed = rec.parse_netlist().unwrap();
            assert_eq!(orig.netlist, parsed);
        }
    }

    #[test]
    fn exact_variant_is_discoverable_by_id() {
        let (bitwidth, front) = small_front();
        let lib = VariantLibrary::from_front(bitwidth, &front);
        let exact = lib.exact().unwrap();
        assert_eq!(exact.id, "exact");
        assert!(lib.find("exact").is_ok());
        assert!(lib.find("nope").is_err());
    }

    #[test]
    fn validate_rejects_corrupt_libraries() {
        let (bitwidth, front) = small_front();
        let mut lib = VariantLibrary::from_front(bitwidth, &front);
        lib.bitwidth = 8; // no longer matches the embedded netlists
        assert!(lib.validate().is_err());

        let empty = VariantLibrary { bitwidth: 4, variants: vec![] };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn filter_keeps_exact_and_respects_threshold() {
        let (bitwidth, front) = small_front();
        let lib = VariantLibrary::from_front(bitwidth, &front);
        let model: AccuracyModel<f64> = AccuracyModel::proxy(0.0, 50.0).unwrap();
        let all = filter_by_accuracy(&lib.variants, &model, "vgg16", f64::INFINITY).unwrap();
        assert_eq!(all.len(), lib.variants.len());
        let strict = filter_by_accuracy(&lib.variants, &model, "vgg16", 0.0).unwrap();
        assert!(strict.iter().all(|v| v.is_exact()));
        assert!(!strict.is_empty());
        assert!(filter_by_accuracy(&lib.variants, &model, "vgg16", -1.0).is_err());
    }
}
