def reward_function(robot_pos, robot_rot, robot_linvel, robot_angvel, actions):
    # Reward for moving forward along the x-axis
    reward_x_velocity = robot_linvel[0] * 2.0  # Increase the weight for moving along x-axis
    
    # Reward for staying upright
    reward_upright = 0.0
    if robot_pos[2] >= 0.5:
        reward_upright = 1.0
    
    # Penalty for moving in y and z directions
    reward_yz_movement = 1.0 - abs(robot_linvel[1]) - abs(robot_linvel[2])
    
    # Reward for not rotating (staying in the same direction)
    reward_rotation = 1.0 - abs(robot_angvel[2])
    
    # Reward for maintaining low action values
    reward_low_action = 1.0 - (sum(abs(actions)) / len(actions)) / 2.36  # Normalize by the average action value
    
    # Combine all rewards
    total_reward = reward_x_velocity + reward_upright + reward_yz_movement + reward_rotation + reward_low_action
    
    return total_reward
