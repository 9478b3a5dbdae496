pub mod adam; pub mod gradcheck; pub mod train;
