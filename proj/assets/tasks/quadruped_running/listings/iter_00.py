def reward_function(robot_pos, robot_rot, robot_linvel, robot_angvel, actions):

    # Reward for moving forward along the x-axis
    reward_x_velocity = robot_linvel[0]
    
    # Reward for staying upright
    reward_upright = 0.0
    if robot_pos[2] >= 0.5:
        reward_upright = 1.0
    
    # Reward for moving in a straight line (not deviating along y-axis)
    reward_y_deviation = 1.0 - abs(robot_linvel[1])
    
    # Reward for not rotating (staying in the same direction)
    reward_rotation = 1.0 - abs(robot_angvel[2])
    
    # Combine all rewards
    total_reward = reward_x_velocity + reward_upright + reward_y_deviation + reward_rotation
    
    return total_reward
