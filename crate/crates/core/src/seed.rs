//! Independent, named seed streams derived from a single master seed.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed for the stream `name` under `master`.
pub fn derive(master: u64, name: &str) -> u64 {
    mix(master ^ mix(fnv1a(name)))
}

/// Seed for item `index` of a stream, e.g. one circuit within one epoch.
pub fn derive_indexed(stream_seed: u64, index: u64) -> u64 {
    mix(stream_seed ^ mix(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}
