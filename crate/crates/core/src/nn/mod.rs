//! Minimal CPU neural-network toolkit: NCHW tensors, convolutional layers
//! with hand-written backward passes, losses and Adam.

pub mod image;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod tensor;

pub use layers::{
    BatchNorm2d, Conv2d, ConvTranspose2d, GlobalAvgPool, Init, Layer, LeakyRelu, MaxPool2d, Param,
    Sequential, Tanh,
};
pub use optim::{count_trainable, zero_grad, Adam, AdamConfig};
pub use image::{rasters_to_tensor, tensor_to_raster};
pub use tensor::{Float, Tensor};
