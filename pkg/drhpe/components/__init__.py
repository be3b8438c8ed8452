"""Components run by drhpe.controller.RunController."""
