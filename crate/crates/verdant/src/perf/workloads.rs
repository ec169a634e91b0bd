//! Built-in inference workloads (ImageNet, 224x224 inputs, int8 tensors).
//!
//! Shapes list convolution and fully connected layers only; pooling and
//! activation stages are negligible MAC-wise and are not modeled.

use crate::error::{Error, Result};
use crate::perf::LayerShape;

pub const BUILTIN_WORKLOADS: [&str; 4] = ["vgg16", "vgg19", "resnet50", "resnet152"];

pub fn builtin_workload(name: &str) -> Result<Vec<LayerShape>> {
    match name {
        "vgg16" => Ok(vgg(&[2, 2, 3, 3, 3])),
        "vgg19" => Ok(vgg(&[2, 2, 4, 4, 4])),
        "resnet50" => Ok(resnet(&[3, 4, 6, 3])),
        "resnet152" => Ok(resnet(&[3, 8, 36, 3])),
        other => Err(Error::Lookup(format!(
            "unknown workload {other:?}; built-ins: {}",
            BUILTIN_WORKLOADS.join(", ")
        ))),
    }
}

fn vgg(blocks: &[usize; 5]) -> Vec<LayerShape> {
    let widths = [64u64, 128, 256, 512, 512];
    let spatial = [224u64, 112, 56, 28, 14];
    let mut layers = Vec::new();
    let mut in_c = 3u64;
    for (stage, (&n, (&width, &hw))) in
        blocks.iter().zip(widths.iter().zip(spatial.iter())).enumerate()
    {
        for i in 0..n {
            let name = format!("conv{}_{}", stage + 1, i + 1);
            layers.push(LayerShape::conv(&name, in_c, width, hw, 3, 1));
            in_c = width;
        }
    }
    layers.push(LayerShape::fc("fc6", 512 * 7 * 7, 4096));
    layers.push(LayerShape::fc("fc7", 4096, 4096));
    layers.push(LayerShape::fc("fc8", 4096, 1000));
    layers
}

/// Bottleneck ResNet: each block is 1x1 reduce, 3x3, 1x1 expand; the first
/// block of a stage downsamples (stride 2 on the reduce and the projection
/// shortcut). Stage depths distinguish the 50/101/152 family members.
fn resnet(blocks: &[usize; 4]) -> Vec<LayerShape> {
    let mut layers = Vec::new();
    layers.push(LayerShape::conv("conv1", 3, 64, 112, 7, 2));
    let mids = [64u64, 128, 256, 512];
    let spatial = [56u64, 28, 14, 7];
    let mut in_c = 64u64;
    for (stage, (&n, (&mid, &hw))) in blocks.iter().zip(mids.iter().zip(spatial.iter())).enumerate()
    {
        let out_c = mid * 4;
        for block in 0..n {
            let stride = if block == 0 && stage > 0 { 2 } else { 1 };
            let tag = format!("s{}b{}", stage + 2, block + 1);
            layers.push(conv_name(&format!("{tag}_a"), in_c, mid, hw, 1, stride));
            layers.push(conv_name(&format!("{tag}_b"), mid, mid, hw, 3, 1));
            layers.push(conv_name(&format!("{tag}_c"), mid, out_c, hw, 1, 1));
            if block == 0 {
                layers.push(conv_name(&format!("{tag}_proj"), in_c, out_c, hw, 1, stride));
            }
            in_c = out_c;
        }
    }
    layers.push(LayerShape::fc("fc", 2048, 1000));
    layers
}

fn conv_name(name: &str, c: u64, k: u64, hw: u64, rs: u64, stride: u64) -> LayerShape {
    LayerShape::conv(name, c, k, hw, rs, stride)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::LayerKind;

    #[test]
    fn vgg16_structure() {
        let layers = builtin_workload("vgg16").unwrap();
        assert_eq!(layers.len(), 16);
        assert_eq!(layers.iter().filter(|l| l.kind == LayerKind::Conv).count(), 13);
        assert_eq!(layers[0].name, "conv1_1");
        assert_eq!(layers[0].c, 3);
        assert_eq!(layers[12].k, 512);
        assert_eq!(layers[13].c, 25088);
        for l in &layers {
            l.validate().unwrap();
        }
    }

    #[test]
    fn vgg19_structure() {
        let layers = builtin_workload("vgg19").unwrap();
        assert_eq!(layers.len(), 19);
        assert_eq!(layers.iter().filter(|l| l.kind == LayerKind::Conv).count(), 16);
    }

    #[test]
    fn resnet50_structure() {
        let layers = builtin_workload("resnet50").unwrap();
        assert_eq!(layers.iter().filter(|l| l.kind == LayerKind::Conv).count(), 53);
        assert_eq!(layers.len(), 54);
        let total: u64 = layers.iter().map(|l| l.macs()).sum();
        // Bottleneck ResNet-50 lands close to its textbook 3.8 GMACs.
        assert!((3.5e9..4.5e9).contains(&(total as f64)), "{total}");
        for l in &layers {
            l.validate().unwrap();
        }
    }

    #[test]
    fn resnet152_structure() {
        let layers = builtin_workload("resnet152").unwrap();
        assert_eq!(layers.iter().filter(|l| l.kind == LayerKind::Conv).count(), 155);
        assert_eq!(layers.len(), 156);
        let macs50: u64 =
            builtin_workload("resnet50").unwrap().iter().map(|l| l.macs()).sum();
        let macs152: u64 = layers.iter().map(|l| l.macs()).sum();
        assert!(macs152 > 2 * macs50);
    }

    #[test]
    fn unknown_workload_is_a_lookup_error() {
        assert!(builtin_workload("alexnet").is_err());
    }

    #[test]
    fn layer_names_are_unique() {
        for name in BUILTIN_WORKLOADS {
            let layers = builtin_workload(name).unwrap();
            let mut names: Vec<&str> = layers.iter().map(|l| l.name.as_str()).collect();
            names.sort_unstable();
            let before = names.len();
            names.dedup();
            assert_eq!(before, names.len(), "{name}");
        }
    }
}
