use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::algebra::{make_transparent_context, Backend, TransparentBackend, DEFAULT_MODULUS};
use crate::opener::{OpenError, Opening};

use super::{Deployment, Signature, SystemParams, TraceCipher};

pub(crate) struct World<B: Backend> {
    pub params: SystemParams<B>,
    pub deployment: Deployment<B>,
    pub rng: ChaCha20Rng,
}

pub(crate) fn transparent_world(seed: u64) -> World<TransparentBackend> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let ctx = make_transparent_context(seed, DEFAULT_MODULUS).unwrap();
    let deployment = Deployment::new(ctx, 2, 4, &mut rng);
    World {
        params: deployment.params.clone(),
        deployment,
        rng,
    }
}

impl<B: Backend> World<B> {
    pub fn sign(&mut self, vehicle: usize, msg: &[u8]) -> Signature<B> {
        self.deployment.sign(vehicle, msg, &mut self.rng)
    }

    pub fn forge(&mut self, vehicle: usize, msg: &[u8]) -> Signature<B> {
        self.deployment.forge(vehicle, msg, &mut self.rng)
    }

    pub fn open(&mut self, trace: &TraceCipher<B>) -> Result<Opening<B>, OpenError> {
        self.deployment.open(trace, &mut self.rng)
    }

    pub fn ids(&self, vehicle: usize) -> (Vec<u8>, Vec<u8>) {
        (
            self.deployment.opener.id.clone(),
            self.deployment.manager_of(vehicle).id.clone(),
        )
    }
}
