def reward_function(copter_pos, copter_rot, target_pos, copter_angvels, actions):
     # Distance to target
    distance_to_target = np.linalg.norm(copter_pos - target_pos)
    
    # Additional penalty for distance on x, y and z axes
    xyz_distance_penalty = np.abs(copter_pos[0] - target_pos[0]) + np.abs(copter_pos[1] - target_pos[1]) + np.abs(copter_pos[2] - target_pos[2])
    
    # Reward for being close to the target
    reward_close_to_target = 1.0 / (1.0 + distance_to_target + xyz_distance_penalty)
    
    # Penalty for exceeding height limit or falling below minimum height
    height_penalty = 0
    if copter_pos[2] > 3.0 or copter_pos[2] < 0.8:
        height_penalty = 1.0

    # Reward for maintaining a stable hover
    reward_hover = 1.0 / (1.0 + np.abs(copter_angvels).sum())
    
    # Reward for maintaining low velocities on x, y and z axes
    reward_low_velocity = 1.0 / (1.0 + np.abs(actions[0]) + np.abs(actions[1]) + np.abs(actions[2]))
    
    # Total reward
    total_reward = reward_close_to_target + reward_hover + reward_low_velocity - height_penalty
    
    return total_reward
