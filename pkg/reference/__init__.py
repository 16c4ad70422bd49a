from .flatness import VolumeDensity, conformal_flatten, is_strongly_flat, volume_density, wedge_density
from .forms import FORM_REGISTRY, eval_form, explicit_solution, get_form, omega_tilde
