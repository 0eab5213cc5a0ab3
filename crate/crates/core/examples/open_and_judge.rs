//! Opens a signature to its signer and lets anyone check the opening.
//!
//! cargo run --example open_and_judge

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vanet_ibgs::algebra::{make_transparent_context, DEFAULT_MODULUS};
use vanet_ibgs::ibgs::Deployment;
use vanet_ibgs::opener::{judge, tracing_value, Opening, RevocationList};

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let ctx = make_transparent_context(3, DEFAULT_MODULUS).expect("valid modulus");
    let dep = Deployment::new(ctx, 1, 5, &mut rng);
    let params = &dep.params;

    let sig = dep.sign(3, b"collision at junction 4", &mut rng).to_modified();
    let opening = dep.open(&sig.trace, &mut rng).expect("signer is registered");
    println!("signer: {}", String::from_utf8_lossy(&opening.vehicle_id));
    println!("judge accepts: {}", judge(params, &dep.opener.id, &sig.trace, &opening));

    // The opening travels as text.
    let text = opening.to_text();
    let back = Opening::from_text(params, &text).expect("well-formed");
    assert_eq!(back, opening);

    // Blaming someone else: swap in another vehicle's identity and tracing value.
    let mut framed = opening.clone();
    framed.vehicle_id = b"veh-0001".to_vec();
    framed.tracing_value = tracing_value(params, &framed.vehicle_id);
    println!("judge accepts a swapped identity: {}", judge(params, &dep.opener.id, &sig.trace, &framed));

    let mut revoked = RevocationList::new();
    revoked.revoke_vehicle(params, &opening.vehicle_id, 1_700_000_000);
    println!("revocation list:\n{}", revoked.to_text());
}
