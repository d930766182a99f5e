"""Lambda three-level system coupled to two quantized fields."""
__version__ = "0.1.0"
