# Django management package