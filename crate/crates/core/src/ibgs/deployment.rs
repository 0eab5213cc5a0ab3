use rand::RngCore;

use crate::algebra::{Backend, GroupContext};
use crate::batchverify::GroupDirectory;
use crate::opener::{self, OpenError, Opening, RegistrationTable};

use super::{
    join_issue, keygen_gm, keygen_tsd, keygen_vehicle, prove_key, setup, sign, GmKey, JoinError, OpenerKey,
    Signature, SystemParams, TeaSecret, VehicleCredential,
};

/// A complete set of authorities and enrolled vehicles sharing one set of
/// public parameters. Convenient for examples, simulations and tests.
#[derive(Debug, Clone)]
pub struct Deployment<B: Backend> {
    pub params: SystemParams<B>,
    pub tea: TeaSecret<B>,
    pub opener: OpenerKey<B>,
    pub managers: Vec<GmKey<B>>,
    pub vehicles: Vec<VehicleCredential<B>>,
    /// Index into `managers` for each vehicle.
    pub group_of: Vec<usize>,
    pub table: RegistrationTable<B>,
}

impl<B: Backend> Deployment<B> {
    /// Sets up `groups` managers (`gm-0`, ...) and enrolls `vehicles`
    /// vehicles (`veh-0000`, ...) round-robin across them.
    pub fn new<R: RngCore + ?Sized>(ctx: GroupContext<B>, groups: usize, vehicles: usize, rng: &mut R) -> Self {
        assert!(groups > 0, "at least one group manager is required");
        let (params, tea) = setup(ctx, rng);
        let opener = keygen_tsd(&params, &tea, b"tsd-0");
        let managers = (0..groups)
            .map(|g| keygen_gm(&params, &tea, format!("gm-{g}").as_bytes(), rng))
            .collect();
        let mut dep = Self {
            params,
            tea,
            opener,
            managers,
            vehicles: Vec::with_capacity(vehicles),
            group_of: Vec::with_capacity(vehicles),
            table: RegistrationTable::new(),
        };
        for i in 0..vehicles {
            dep.enroll(format!("veh-{i:04}").as_bytes(), i % groups, rng)
                .expect("fresh identities always enroll");
        }
        dep
    }

    /// Runs the join protocol for a new vehicle and returns its index.
    pub fn enroll<R: RngCore + ?Sized>(&mut self, vehicle_id: &[u8], group: usize, rng: &mut R) -> Result<usize, JoinError> {
        let key = keygen_vehicle(&self.params, &self.tea, vehicle_id);
        let proof = prove_key(&self.params, &key, &(self.vehicles.len() as u64).to_be_bytes(), rng);
        let certificate = join_issue(&self.params, &self.managers[group], vehicle_id, &proof, &mut self.table, rng)?;
        self.vehicles.push(VehicleCredential { key, certificate });
        self.group_of.push(group);
        Ok(self.vehicles.len() - 1)
    }

    pub fn manager_of(&self, vehicle: usize) -> &GmKey<B> {
        &self.managers[self.group_of[vehicle]]
    }

    pub fn sign<R: RngCore + ?Sized>(&self, vehicle: usize, msg: &[u8], rng: &mut R) -> Signature<B> {
        sign(
            &self.params,
            &self.vehicles[vehicle],
            &self.opener.id,
            &self.manager_of(vehicle).id,
            msg,
            rng,
        )
    }

    /// Signs with a certificate whose `D` has been replaced by a random
    /// element. The proof is internally consistent, so the challenge hash
    /// checks out, but the certificate-link pairing equation fails.
    pub fn forge<R: RngCore + ?Sized>(&self, vehicle: usize, msg: &[u8], rng: &mut R) -> Signature<B> {
        let mut cred = self.vehicles[vehicle].clone();
        cred.certificate.cert = self.params.ctx.random_g1(rng);
        sign(&self.params, &cred, &self.opener.id, &self.manager_of(vehicle).id, msg, rng)
    }

    pub fn open<R: RngCore + ?Sized>(
        &self,
        trace: &super::TraceCipher<B>,
        rng: &mut R,
    ) -> Result<Opening<B>, OpenError> {
        opener::open(&self.params, &self.opener, trace, &self.table, rng)
    }

    /// Maps every manager's tag to its identity.
    pub fn directory(&self) -> GroupDirectory<B> {
        let mut dir = GroupDirectory::new();
        for gm in &self.managers {
            dir.insert(&gm.group_tag, &gm.id);
        }
        dir
    }
}
