from .convert import ConversionError, ConversionReport, LayerReport, convert, load_checkpoint

__all__ = ["ConversionError", "ConversionReport", "LayerReport", "convert", "load_checkpoint"]
