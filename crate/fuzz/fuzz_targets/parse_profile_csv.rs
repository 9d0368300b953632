#![no_main]
use capillary_harness::read_profile_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((x, rho)) = read_profile_csv(data) {
        assert_eq!(x.len(), rho.len());
        assert!(x.iter().chain(&rho).all(|v| v.is_finite()));
    }
});
