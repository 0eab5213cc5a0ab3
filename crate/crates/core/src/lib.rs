// Derived `Clone`/`Copy` would demand `B: Copy`; the fields are `Copy`
// whatever the backend.
macro_rules! copy_with_backend {
    ($name:ident) => {
        impl<B: $crate::algebra::Backend> Clone for $name<B> {
            fn clone(&self) -> Self {
                *self
            }
        }
        impl<B: $crate::algebra::Backend> Copy for $name<B> {}
    };
}

pub mod algebra;
pub mod batchverify;
pub mod harness;
pub mod ibgs;
pub mod opener;
pub mod scheduler;
