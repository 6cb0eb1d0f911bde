# Support utilities package