"""Line-breaking constructions of stable trees and checks of their laws."""

__version__ = "0.1.0"
