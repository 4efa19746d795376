"""Thermal-detection driven pedestrian signal control toolkit.

Subpackages and modules:

* :mod:`barrierfree.kernels` -- detector building blocks on rank-3 arrays
* :mod:`barrierfree.detection` -- class vocabulary, boxes, mobility groups
* :mod:`barrierfree.geometry` -- crosswalk polygons and containment
* :mod:`barrierfree.controller` -- adaptive green-extension state machine
* :mod:`barrierfree.sim` -- crossing simulation and validation-window oracle
* :mod:`barrierfree.dataset` -- label parsing, splits and COCO-style AP
"""

__version__ = "0.1.0"
