"""
EventCompass Visualization Module
"""

from .render import (
    render_rgb, polarity_map, context_colors, context_label_map, render_labels, blend,
    mine_image_contexts, save_png, render_sample
)

__all__ = [
    "render_rgb", "polarity_map", "context_colors", "context_label_map", "render_labels", "blend",
    "mine_image_contexts", "save_png", "render_sample"
]
